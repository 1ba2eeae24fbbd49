/* tslint:disable */
/* eslint-disable */

export class Agreement {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Fraction of time both annotators assign the same label.
     */
    agreement: number;
    d_backward: number;
    d_forward: number;
    d_sym: number;
}

export function compare(a: string, b: string, duration: number, include_outcome: boolean): Agreement;

export function downsample(t: Float64Array, v: Float64Array, from: number, to: number, max_points: number): Float64Array;

/**
 * Index of the frame shown at `t`.
 */
export function nearest(timestamps: Float64Array, t: number): number;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_agreement_free: (a: number, b: number) => void;
    readonly __wbg_get_agreement_agreement: (a: number) => number;
    readonly __wbg_get_agreement_d_backward: (a: number) => number;
    readonly __wbg_get_agreement_d_forward: (a: number) => number;
    readonly __wbg_get_agreement_d_sym: (a: number) => number;
    readonly __wbg_set_agreement_agreement: (a: number, b: number) => void;
    readonly __wbg_set_agreement_d_backward: (a: number, b: number) => void;
    readonly __wbg_set_agreement_d_forward: (a: number, b: number) => void;
    readonly __wbg_set_agreement_d_sym: (a: number, b: number) => void;
    readonly compare: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly downsample: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly nearest: (a: number, b: number, c: number) => [number, number, number];
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
