/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_clipdemo_free: (a: number, b: number) => void;
export const __wbg_cliptrajectory_free: (a: number, b: number) => void;
export const __wbg_get_clipdemo_clients: (a: number) => number;
export const __wbg_get_clipdemo_count_noise: (a: number) => number;
export const __wbg_get_clipdemo_initial_clip: (a: number) => number;
export const __wbg_get_clipdemo_learning_rate: (a: number) => number;
export const __wbg_get_clipdemo_norm_decay: (a: number) => number;
export const __wbg_get_clipdemo_norm_median: (a: number) => number;
export const __wbg_get_clipdemo_norm_spread: (a: number) => number;
export const __wbg_get_clipdemo_rounds: (a: number) => number;
export const __wbg_get_clipdemo_seed: (a: number) => bigint;
export const __wbg_get_clipdemo_target_quantile: (a: number) => number;
export const __wbg_set_clipdemo_clients: (a: number, b: number) => void;
export const __wbg_set_clipdemo_count_noise: (a: number, b: number) => void;
export const __wbg_set_clipdemo_initial_clip: (a: number, b: number) => void;
export const __wbg_set_clipdemo_learning_rate: (a: number, b: number) => void;
export const __wbg_set_clipdemo_norm_decay: (a: number, b: number) => void;
export const __wbg_set_clipdemo_norm_median: (a: number, b: number) => void;
export const __wbg_set_clipdemo_norm_spread: (a: number, b: number) => void;
export const __wbg_set_clipdemo_rounds: (a: number, b: number) => void;
export const __wbg_set_clipdemo_seed: (a: number, b: bigint) => void;
export const __wbg_set_clipdemo_target_quantile: (a: number, b: number) => void;
export const __wbg_syntheticload_free: (a: number, b: number) => void;
export const adaptive_clip_trajectory: (a: number) => [number, number, number];
export const clipdemo_new: () => number;
export const cliptrajectory_clip: (a: number) => [number, number];
export const cliptrajectory_quantile: (a: number) => [number, number];
export const privacy_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const synthetic_load: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
export const syntheticload_clients: (a: number) => number;
export const syntheticload_correlation: (a: number) => [number, number];
export const syntheticload_hours: (a: number) => number;
export const syntheticload_mean_correlation: (a: number) => number;
export const syntheticload_values: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
