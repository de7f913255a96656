/* tslint:disable */
/* eslint-disable */

/**
 * Inputs of the clipping simulation. Update norms in round `t` are
 * lognormal with median `norm_median·norm_decay^t`.
 */
export class ClipDemo {
    free(): void;
    [Symbol.dispose](): void;
    constructor();
    clients: number;
    count_noise: number;
    initial_clip: number;
    learning_rate: number;
    norm_decay: number;
    norm_median: number;
    norm_spread: number;
    rounds: number;
    seed: bigint;
    target_quantile: number;
}

/**
 * Clip bound and the true norm quantile per round.
 */
export class ClipTrajectory {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Bound in force at the start of each round, plus the final bound.
     */
    readonly clip: Float64Array;
    /**
     * Target quantile of the norm distribution in each round.
     */
    readonly quantile: Float64Array;
}

/**
 * Hourly load of a synthetic population and its correlation structure.
 */
export class SyntheticLoad {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly clients: number;
    /**
     * Row-major `clients × clients` Pearson coefficients.
     */
    readonly correlation: Float64Array;
    readonly hours: number;
    /**
     * Mean coefficient over all client pairs.
     */
    readonly mean_correlation: number;
    /**
     * Row-major `clients × hours` kWh values.
     */
    readonly values: Float64Array;
}

export function adaptive_clip_trajectory(demo: ClipDemo): ClipTrajectory;

export function privacy_curve(zs: Float64Array, rounds: number, q: number, delta: number): Float64Array;

export function synthetic_load(clients: number, days: number, shared_weight: number, noise_std: number, seed: bigint): SyntheticLoad;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_clipdemo_free: (a: number, b: number) => void;
    readonly __wbg_cliptrajectory_free: (a: number, b: number) => void;
    readonly __wbg_get_clipdemo_clients: (a: number) => number;
    readonly __wbg_get_clipdemo_count_noise: (a: number) => number;
    readonly __wbg_get_clipdemo_initial_clip: (a: number) => number;
    readonly __wbg_get_clipdemo_learning_rate: (a: number) => number;
    readonly __wbg_get_clipdemo_norm_decay: (a: number) => number;
    readonly __wbg_get_clipdemo_norm_median: (a: number) => number;
    readonly __wbg_get_clipdemo_norm_spread: (a: number) => number;
    readonly __wbg_get_clipdemo_rounds: (a: number) => number;
    readonly __wbg_get_clipdemo_seed: (a: number) => bigint;
    readonly __wbg_get_clipdemo_target_quantile: (a: number) => number;
    readonly __wbg_set_clipdemo_clients: (a: number, b: number) => void;
    readonly __wbg_set_clipdemo_count_noise: (a: number, b: number) => void;
    readonly __wbg_set_clipdemo_initial_clip: (a: number, b: number) => void;
    readonly __wbg_set_clipdemo_learning_rate: (a: number, b: number) => void;
    readonly __wbg_set_clipdemo_norm_decay: (a: number, b: number) => void;
    readonly __wbg_set_clipdemo_norm_median: (a: number, b: number) => void;
    readonly __wbg_set_clipdemo_norm_spread: (a: number, b: number) => void;
    readonly __wbg_set_clipdemo_rounds: (a: number, b: number) => void;
    readonly __wbg_set_clipdemo_seed: (a: number, b: bigint) => void;
    readonly __wbg_set_clipdemo_target_quantile: (a: number, b: number) => void;
    readonly __wbg_syntheticload_free: (a: number, b: number) => void;
    readonly adaptive_clip_trajectory: (a: number) => [number, number, number];
    readonly clipdemo_new: () => number;
    readonly cliptrajectory_clip: (a: number) => [number, number];
    readonly cliptrajectory_quantile: (a: number) => [number, number];
    readonly privacy_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly synthetic_load: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
    readonly syntheticload_clients: (a: number) => number;
    readonly syntheticload_correlation: (a: number) => [number, number];
    readonly syntheticload_hours: (a: number) => number;
    readonly syntheticload_mean_correlation: (a: number) => number;
    readonly syntheticload_values: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
