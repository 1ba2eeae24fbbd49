/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_agreement_free: (a: number, b: number) => void;
export const __wbg_get_agreement_agreement: (a: number) => number;
export const __wbg_get_agreement_d_backward: (a: number) => number;
export const __wbg_get_agreement_d_forward: (a: number) => number;
export const __wbg_get_agreement_d_sym: (a: number) => number;
export const __wbg_set_agreement_agreement: (a: number, b: number) => void;
export const __wbg_set_agreement_d_backward: (a: number, b: number) => void;
export const __wbg_set_agreement_d_forward: (a: number, b: number) => void;
export const __wbg_set_agreement_d_sym: (a: number, b: number) => void;
export const compare: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const downsample: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const nearest: (a: number, b: number, c: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
