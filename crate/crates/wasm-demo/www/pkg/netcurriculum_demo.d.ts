/* tslint:disable */
/* eslint-disable */

export class Simulation {
    free(): void;
    [Symbol.dispose](): void;
    loadModel(json: string): void;
    constructor(config_json: string, seed: bigint);
    reset(): string;
    setReward(expr: string): void;
    snapshot(): string;
    /**
     * JSON snapshot after one step under `policy`: none, all, strongest,
     * oracle or model.
     */
    step(policy: string): string;
}

export function coverageMap(config_json: string, cols: number, rows: number): Float64Array;

export function linkBudget(config_json: string, max_distance: number, samples: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_simulation_free: (a: number, b: number) => void;
    readonly coverageMap: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly linkBudget: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly simulation_loadModel: (a: number, b: number, c: number) => [number, number];
    readonly simulation_new: (a: number, b: number, c: bigint) => [number, number, number];
    readonly simulation_reset: (a: number) => [number, number];
    readonly simulation_setReward: (a: number, b: number, c: number) => [number, number];
    readonly simulation_snapshot: (a: number) => [number, number];
    readonly simulation_step: (a: number, b: number, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
