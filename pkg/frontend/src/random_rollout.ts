/**
 * Example: drive seeded random episodes through the binding and print the
 * per-episode statistics.
 *
 * Usage: node dist/random_rollout.js [preset] [seed] [episodes]
 * Requires the service to be running (SURVIVALENV_URL, default
 * http://127.0.0.1:8321); pass --spawn to start one automatically.
 */

import { SurvivalClient, type EpisodeStats, type StepResult } from "./client.js";
import { mulberry32, randomAction } from "./rng.js";
import { startServer } from "./server.js";

function formatStats(stats: EpisodeStats): string {
    return [
        `length = ${stats.length}`,
        `returns = [${stats.returns.map((r) => r.toFixed(1)).join(", ")}]`,
        `kills = [${stats.kills.join(", ")}]`,
        `heals_consumed = [${stats.heals_consumed.join(", ")}]`,
        `boxes_placed = [${stats.boxes_placed.join(", ")}]`,
    ].join("\n");
}

async function main() {
    const args = process.argv.slice(2).filter((a) => a !== "--spawn");
    const spawnServer = process.argv.includes("--spawn");
    const [preset = "ffa-1", seedArg = "0", episodesArg = "1"] = args;
    const seed = Number(seedArg);
    const episodes = Number(episodesArg);

    const server = spawnServer ? await startServer() : null;
    const baseUrl =
        server?.baseUrl ?? process.env.SURVIVALENV_URL ?? "http://127.0.0.1:8321";
    const client = new SurvivalClient(baseUrl);
    const env = await client.make({ preset });
    try {
        for (let episode = 0; episode < episodes; episode++) {
            const next = mulberry32(seed + episode);
            await env.reset(seed + episode);
            let result: StepResult | undefined;
            do {
                const actions = Array.from({ length: env.space.num_agents },
                    (_, i) => (result?.events.alive[i] === 0 ? null : randomAction(next)));
                result = await env.step(actions);
            } while (!result.done);
            console.log(`episode ${episode} (seed ${seed + episode}):`);
            console.log(formatStats(result.stats!));
        }
    } finally {
        await env.close();
        await server?.stop();
    }
}

main().catch((error) => {
    console.error(error);
    process.exit(1);
});
