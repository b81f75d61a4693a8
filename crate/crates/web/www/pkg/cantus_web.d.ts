/* tslint:disable */
/* eslint-disable */

/**
 * Reference and Yin-estimated contours of an exponential sine glide.
 */
export class GlideTrack {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Estimated f0, 0 where unvoiced.
     */
    estimate(): Float32Array;
    /**
     * Ground-truth f0 at each frame center, Hz.
     */
    truth(): Float32Array;
    voiced(): Uint8Array;
    readonly frame_rate: number;
}

/**
 * Rendered audio and log-mel spectrogram of one sung note.
 */
export class SungNote {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Row-major `bands × frames` log-mel values.
     */
    mel(): Float32Array;
    phonemes(): string;
    samples(): Float32Array;
    readonly bands: number;
    readonly frames: number;
    readonly sample_rate: number;
}

/**
 * Token × frame weights of a phrase before and after a time warp.
 */
export class WarpView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Row-major `tokens × frames_after` weights.
     */
    after(): Float32Array;
    /**
     * Row-major `tokens × frames_before` weights.
     */
    before(): Float32Array;
    /**
     * Space-separated phoneme tokens (rows of both maps).
     */
    tokens(): string;
    readonly frames_after: number;
    readonly frames_before: number;
}

/**
 * Sings `lyric` on MIDI note `midi` for `seconds` with the reference renderer.
 */
export function singNote(lyric: string, midi: number, seconds: number, seed: bigint): SungNote;

/**
 * Tracks a synthetic sine glide from `start_hz` to `end_hz`.
 */
export function trackGlide(start_hz: number, end_hz: number, seconds: number, threshold: number): GlideTrack;

/**
 * Compiles a short phrase, one 0.4 s note per word, and warps its
 * alignment under `rate_curve` (e.g. `0:0.5,1:2`).
 */
export function warpPhrase(text: string, rate_curve: string): WarpView;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_glidetrack_free: (a: number, b: number) => void;
    readonly __wbg_sungnote_free: (a: number, b: number) => void;
    readonly __wbg_warpview_free: (a: number, b: number) => void;
    readonly glidetrack_estimate: (a: number) => [number, number];
    readonly glidetrack_frame_rate: (a: number) => number;
    readonly glidetrack_truth: (a: number) => [number, number];
    readonly glidetrack_voiced: (a: number) => [number, number];
    readonly singNote: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
    readonly sungnote_bands: (a: number) => number;
    readonly sungnote_frames: (a: number) => number;
    readonly sungnote_mel: (a: number) => [number, number];
    readonly sungnote_phonemes: (a: number) => [number, number];
    readonly sungnote_sample_rate: (a: number) => number;
    readonly sungnote_samples: (a: number) => [number, number];
    readonly trackGlide: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly warpPhrase: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly warpview_after: (a: number) => [number, number];
    readonly warpview_before: (a: number) => [number, number];
    readonly warpview_frames_after: (a: number) => number;
    readonly warpview_frames_before: (a: number) => number;
    readonly warpview_tokens: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
