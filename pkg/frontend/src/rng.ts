/** Small deterministic RNG (mulberry32) for seeded action sampling. */

import { ACTION_SIZES, type Action } from "./client.js";

export function mulberry32(seed: number): () => number {
    let a = seed >>> 0;
    return () => {
        a |= 0;
        a = (a + 0x6d2b79f5) | 0;
        let t = Math.imul(a ^ (a >>> 15), 1 | a);
        t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
        return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
    };
}

export function randomAction(next: () => number): Action {
    return ACTION_SIZES.map((size) => Math.floor(next() * size));
}
