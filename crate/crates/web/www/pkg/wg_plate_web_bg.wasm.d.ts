/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_session_free: (a: number, b: number) => void;
export const case_names: () => [number, number];
export const session_adapt: (a: number, b: number) => [number, number];
export const session_cell_values: (a: number) => [number, number];
export const session_dofs: (a: number) => number;
export const session_error: (a: number) => number;
export const session_eta: (a: number) => number;
export const session_history_json: (a: number) => [number, number];
export const session_indicators: (a: number) => [number, number];
export const session_marked: (a: number) => [number, number];
export const session_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const session_num_cells: (a: number) => number;
export const session_refine_uniform: (a: number) => [number, number];
export const session_triangles: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
