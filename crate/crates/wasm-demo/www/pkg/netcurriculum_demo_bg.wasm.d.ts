/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_simulation_free: (a: number, b: number) => void;
export const coverageMap: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const linkBudget: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const simulation_loadModel: (a: number, b: number, c: number) => [number, number];
export const simulation_new: (a: number, b: number, c: bigint) => [number, number, number];
export const simulation_reset: (a: number) => [number, number];
export const simulation_setReward: (a: number, b: number, c: number) => [number, number];
export const simulation_snapshot: (a: number) => [number, number];
export const simulation_step: (a: number, b: number, c: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
