/* tslint:disable */
/* eslint-disable */

export class Session {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Dörfler-marks the current indicators with `theta`, refines and solves.
     */
    adapt(theta: number): void;
    /**
     * `u_h` at each cell centroid.
     */
    cell_values(): Float64Array;
    dofs(): number;
    /**
     * Discrete energy error, `NaN` without an exact solution.
     */
    error(): number;
    eta(): number;
    history_json(): string;
    /**
     * Local indicators `eta_T`.
     */
    indicators(): Float64Array;
    /**
     * Ids of the cells refined in the last step, in the previous mesh.
     */
    marked(): Uint32Array;
    /**
     * Solves the named case on a uniform `n x n` mesh. A non-positive `eps`
     * keeps the case default.
     */
    constructor(_case: string, k: number, eps: number, n: number);
    num_cells(): number;
    /**
     * Bisects every cell twice, halving the mesh size, and solves.
     */
    refine_uniform(): void;
    /**
     * Triangle corners, six numbers `x0 y0 x1 y1 x2 y2` per cell.
     */
    triangles(): Float64Array;
}

/**
 * Names accepted by [`Session::new`], comma separated.
 */
export function case_names(): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_session_free: (a: number, b: number) => void;
    readonly case_names: () => [number, number];
    readonly session_adapt: (a: number, b: number) => [number, number];
    readonly session_cell_values: (a: number) => [number, number];
    readonly session_dofs: (a: number) => number;
    readonly session_error: (a: number) => number;
    readonly session_eta: (a: number) => number;
    readonly session_history_json: (a: number) => [number, number];
    readonly session_indicators: (a: number) => [number, number];
    readonly session_marked: (a: number) => [number, number];
    readonly session_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly session_num_cells: (a: number) => number;
    readonly session_refine_uniform: (a: number) => [number, number];
    readonly session_triangles: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
