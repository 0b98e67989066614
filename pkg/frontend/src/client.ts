/**
 * Typed client for the survivalenv HTTP service.
 *
 * The binding is a thin pass-through: observations, rewards and state
 * hashes cross the boundary exactly as the native environment produced
 * them. State hashes are 64-bit and therefore kept as strings.
 */

import http from "node:http";

import { z } from "zod";

export const ACTION_SIZES = [3, 3, 3, 2, 2, 2] as const;

export type Action = number[]; // one entry per ACTION_SIZES component

const BlockSchema = z.object({
    name: z.string(),
    offset: z.number().int(),
    shape: z.array(z.number().int()),
});

const SpaceSchema = z.object({
    num_agents: z.number().int(),
    teams: z.boolean(),
    action_sizes: z.array(z.number().int()),
    observation_size: z.number().int(),
    blocks: z.array(BlockSchema),
});

const MakeSchema = z.object({
    env_id: z.number().int(),
    space: SpaceSchema,
});

const ObservationsSchema = z.object({
    observations: z.array(z.array(z.number())),
});

const EventsSchema = z.object({
    alive: z.array(z.number().int()),
    died: z.array(z.number().int()),
    kills: z.array(z.number().int()),
});

const StatsSchema = z.object({
    heals_consumed: z.array(z.number().int()),
    boxes_placed: z.array(z.number().int()),
    kills: z.array(z.number().int()),
    returns: z.array(z.number()),
    length: z.number().int(),
});

const StepSchema = z.object({
    observations: z.array(z.array(z.number())),
    rewards: z.array(z.number()),
    done: z.boolean(),
    state_hash: z.string(),
    events: EventsSchema,
    stats: StatsSchema.nullable(),
});

const RolloutSchema = z.object({
    observations: z.array(z.array(z.array(z.number()))),
    rewards: z.array(z.array(z.number())),
    dones: z.array(z.boolean()),
    hashes: z.array(z.string()),
    seconds_per_step: z.number(),
});

export type SpaceDescriptor = z.infer<typeof SpaceSchema>;
export type StepResult = z.infer<typeof StepSchema>;
export type RolloutResult = z.infer<typeof RolloutSchema>;
export type EpisodeStats = z.infer<typeof StatsSchema>;

export class ServiceError extends Error {
    constructor(public status: number, detail: string) {
        super(`service error ${status}: ${detail}`);
    }
}

// Keep-alive agent: a fresh connection per step would dominate step cost.
const agent = new http.Agent({ keepAlive: true, maxSockets: 16 });

function request(url: string, method: string, body?: unknown): Promise<any> {
    const data = body === undefined ? undefined : JSON.stringify(body);
    return new Promise((resolve, reject) => {
        const req = http.request(
            url,
            {
                method,
                agent,
                headers: {
                    "content-type": "application/json",
                    ...(data ? { "content-length": Buffer.byteLength(data) } : {}),
                },
            },
            (res) => {
                const chunks: Buffer[] = [];
                res.on("data", (chunk) => chunks.push(chunk));
                res.on("end", () => {
                    const text = Buffer.concat(chunks).toString("utf-8");
                    const status = res.statusCode ?? 0;
                    if (status < 200 || status >= 300) {
                        reject(new ServiceError(status, text));
                        return;
                    }
                    try {
                        resolve(JSON.parse(text));
                    } catch (error) {
                        reject(error);
                    }
                });
            },
        );
        req.on("socket", (socket) => socket.setNoDelay(true));
        req.on("error", reject);
        req.end(data);
    });
}

export class SurvivalClient {
    constructor(public baseUrl: string) {}

    async presets(): Promise<string[]> {
        const payload = await request(`${this.baseUrl}/presets`, "GET");
        return z.object({ presets: z.array(z.string()) }).parse(payload).presets;
    }

    async make(options: { preset?: string; configText?: string }): Promise<EnvHandle> {
        const payload = await request(`${this.baseUrl}/envs`, "POST", {
            preset: options.preset ?? null,
            config_text: options.configText ?? null,
        });
        const made = MakeSchema.parse(payload);
        return new EnvHandle(this, made.env_id, made.space);
    }
}

export class EnvHandle {
    constructor(
        private client: SurvivalClient,
        public readonly envId: number,
        public readonly space: SpaceDescriptor,
    ) {}

    private url(suffix: string): string {
        return `${this.client.baseUrl}/envs/${this.envId}${suffix}`;
    }

    async reset(seed: number): Promise<number[][]> {
        const payload = await request(this.url("/reset"), "POST", { seed });
        return ObservationsSchema.parse(payload).observations;
    }

    /** One action per agent index; null for a dead agent. */
    async step(actions: (Action | null)[]): Promise<StepResult> {
        const payload = await request(this.url("/step"), "POST", { actions });
        // Hot path: shape check only; full zod validation of every float
        // would add more latency than the HTTP round trip itself.
        if (!Array.isArray(payload.observations) ||
            !Array.isArray(payload.rewards) ||
            typeof payload.done !== "boolean" ||
            typeof payload.state_hash !== "string") {
            throw new ServiceError(200, `malformed step response`);
        }
        return payload as StepResult;
    }

    /** Native in-process rollout of a full action sequence; the reference
     *  stream the binding is compared against. */
    async rollout(seed: number, actions: (Action | null)[][]): Promise<RolloutResult> {
        const payload = await request(this.url("/rollout"), "POST", { seed, actions });
        return RolloutSchema.parse(payload);
    }

    async close(): Promise<void> {
        await request(this.url(""), "DELETE");
    }
}
