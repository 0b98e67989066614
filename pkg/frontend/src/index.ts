export {
    ACTION_SIZES, EnvHandle, ServiceError, SurvivalClient,
    type Action, type EpisodeStats, type RolloutResult, type SpaceDescriptor,
    type StepResult,
} from "./client.js";
export { mulberry32, randomAction } from "./rng.js";
export { startServer, type ServerHandle } from "./server.js";
