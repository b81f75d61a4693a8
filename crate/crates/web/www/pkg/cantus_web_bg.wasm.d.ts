/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_glidetrack_free: (a: number, b: number) => void;
export const __wbg_sungnote_free: (a: number, b: number) => void;
export const __wbg_warpview_free: (a: number, b: number) => void;
export const glidetrack_estimate: (a: number) => [number, number];
export const glidetrack_frame_rate: (a: number) => number;
export const glidetrack_truth: (a: number) => [number, number];
export const glidetrack_voiced: (a: number) => [number, number];
export const singNote: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
export const sungnote_bands: (a: number) => number;
export const sungnote_frames: (a: number) => number;
export const sungnote_mel: (a: number) => [number, number];
export const sungnote_phonemes: (a: number) => [number, number];
export const sungnote_sample_rate: (a: number) => number;
export const sungnote_samples: (a: number) => [number, number];
export const trackGlide: (a: number, b: number, c: number, d: number) => [number, number, number];
export const warpPhrase: (a: number, b: number, c: number, d: number) => [number, number, number];
export const warpview_after: (a: number) => [number, number];
export const warpview_before: (a: number) => [number, number];
export const warpview_frames_after: (a: number) => number;
export const warpview_frames_before: (a: number) => number;
export const warpview_tokens: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
