// Session state machine for the generate -> review -> edit loop.
//
// The reducer is pure and enforces the two hard rules: nothing leaves
// Generating/Compiling except the matching completion or failure event, and
// user actions arriving while busy are ignored rather than interleaved.

import type { ApiResult, BlockDocument, Diagnostic } from "./api.js";

export type Phase =
    | "Idle"
    | "Generating"
    | "Review"
    | "Compiling"
    | "Compiled"
    | "Error";

export type BannerKind =
    | "invalid-input"
    | "model-output-failed"
    | "backend-unreachable"
    | "transport-failed";

export interface ErrorBanner {
    kind: BannerKind;
    codes: string[];
    message: string;
    rawCompletions: string[];
}

export interface HistoryEntry {
    action: string;
    timestamp: number;
    outcome: string;
    // Buffer content before the action ran; restore returns to it byte-exact.
    priorCode: string;
}

interface PendingAction {
    action: string;
    priorCode: string;
}

export interface SessionState {
    phase: Phase;
    description: string;
    model: string;
    code: string;
    blocks: BlockDocument | null;
    diagnostics: Diagnostic[];
    banner: ErrorBanner | null;
    history: HistoryEntry[];
    busySince: number | null;
    pending: PendingAction | null;
}

export const initialState: SessionState = {
    phase: "Idle",
    description: "",
    model: "default",
    code: "",
    blocks: null,
    diagnostics: [],
    banner: null,
    history: [],
    busySince: null,
    pending: null,
};

export type SessionEvent =
    | { type: "SET_DESCRIPTION"; description: string }
    | { type: "SET_MODEL"; model: string }
    | { type: "SET_CODE"; code: string }
    | { type: "CODE_IT_STARTED"; at: number }
    | { type: "GENERATE_OK"; code: string; at: number }
    | { type: "GENERATE_FAILED"; failure: Failure; at: number }
    | { type: "MAKE_IT_STARTED"; at: number }
    | { type: "COMPILE_OK"; blocks: BlockDocument; at: number }
    | { type: "COMPILE_FAILED"; diagnostics: Diagnostic[]; at: number }
    | { type: "EDIT_STARTED"; instruction: string; at: number }
    | { type: "EDIT_OK"; code: string; at: number }
    | { type: "EDIT_FAILED"; failure: Failure; at: number }
    | { type: "RESTORE"; index: number; at: number };

export type Failure = Exclude<ApiResult<never>, { kind: "ok" }>;

export function bannerFromFailure(failure: Failure): ErrorBanner {
    if (failure.kind === "transport-failed") {
        return {
            kind: "transport-failed",
            codes: [],
            message: failure.message,
            rawCompletions: [],
        };
    }
    const codes = failure.diagnostics.map((d) => d.code);
    const message = failure.diagnostics[0]?.message ?? "request failed";
    return {
        kind: failure.kind,
        codes,
        message,
        rawCompletions:
            failure.kind === "model-output-failed" ? failure.rawCompletions : [],
    };
}

export const busy = (state: SessionState): boolean =>
    state.phase === "Generating" || state.phase === "Compiling";

export const canCodeIt = (state: SessionState): boolean =>
    !busy(state) && state.description.trim().length > 0;

export const canMakeIt = (state: SessionState): boolean =>
    (state.phase === "Review" || state.phase === "Compiled") &&
    state.code.length > 0;

export const canEdit = canMakeIt;

function recorded(
    state: SessionState,
    action: string,
    outcome: string,
    at: number,
    priorCode: string,
): HistoryEntry[] {
    return [...state.history, { action, timestamp: at, outcome, priorCode }];
}

function failurePhase(state: SessionState): Phase {
    // Keep the buffer editable whenever there is one; only a session with
    // nothing to show lands in the terminal Error phase.
    return state.code.length > 0 ? "Review" : "Error";
}

export function reducer(state: SessionState, event: SessionEvent): SessionState {
    switch (event.type) {
        case "SET_DESCRIPTION":
            if (busy(state)) return state;
            return { ...state, description: event.description };

        case "SET_MODEL":
            if (busy(state)) return state;
            return { ...state, model: event.model };

        case "SET_CODE":
            if (busy(state)) return state;
            if (state.phase !== "Review" && state.phase !== "Compiled") return state;
            return { ...state, code: event.code, phase: "Review", diagnostics: [] };

        case "CODE_IT_STARTED":
            if (!canCodeIt(state)) return state;
            return {
                ...state,
                phase: "Generating",
                banner: null,
                diagnostics: [],
                busySince: event.at,
                pending: { action: "code-it", priorCode: state.code },
            };

        case "GENERATE_OK": {
            if (state.phase !== "Generating") return state;
            const pending = state.pending;
            return {
                ...state,
                phase: "Review",
                code: event.code,
                blocks: null,
                banner: null,
                busySince: null,
                pending: null,
                history: recorded(
                    state,
                    pending?.action ?? "code-it",
                    "ok",
                    event.at,
                    pending?.priorCode ?? "",
                ),
            };
        }

        case "GENERATE_FAILED":
        case "EDIT_FAILED": {
            if (state.phase !== "Generating") return state;
            const banner = bannerFromFailure(event.failure);
            const pending = state.pending;
            return {
                ...state,
                phase: failurePhase(state),
                banner,
                busySince: null,
                pending: null,
                history: recorded(
                    state,
                    pending?.action ?? "code-it",
                    banner.codes[0] ?? banner.kind,
                    event.at,
                    pending?.priorCode ?? state.code,
                ),
            };
        }

        case "MAKE_IT_STARTED":
            if (!canMakeIt(state)) return state;
            return {
                ...state,
                phase: "Compiling",
                banner: null,
                diagnostics: [],
                busySince: event.at,
                pending: { action: "make-it", priorCode: state.code },
            };

        case "COMPILE_OK":
            if (state.phase !== "Compiling") return state;
            return {
                ...state,
                phase: "Compiled",
                blocks: event.blocks,
                banner: null,
                busySince: null,
                pending: null,
                history: recorded(state, "make-it", "ok", event.at, state.code),
            };

        case "COMPILE_FAILED":
            if (state.phase !== "Compiling") return state;
            return {
                ...state,
                phase: "Review",
                diagnostics: event.diagnostics,
                banner: {
                    kind: "invalid-input",
                    codes: event.diagnostics.map((d) => d.code),
                    message: event.diagnostics[0]?.message ?? "compile failed",
                    rawCompletions: [],
                },
                busySince: null,
                pending: null,
                history: recorded(
                    state,
                    "make-it",
                    event.diagnostics[0]?.code ?? "invalid",
                    event.at,
                    state.code,
                ),
            };

        case "EDIT_STARTED":
            if (!canEdit(state)) return state;
            return {
                ...state,
                phase: "Generating",
                banner: null,
                diagnostics: [],
                busySince: event.at,
                pending: {
                    action: `edit: ${event.instruction}`,
                    priorCode: state.code,
                },
            };

        case "EDIT_OK": {
            if (state.phase !== "Generating") return state;
            const pending = state.pending;
            return {
                ...state,
                phase: "Review",
                code: event.code,
                blocks: null,
                banner: null,
                busySince: null,
                pending: null,
                history: recorded(
                    state,
                    pending?.action ?? "edit",
                    "ok",
                    event.at,
                    pending?.priorCode ?? state.code,
                ),
            };
        }

        case "RESTORE": {
            if (busy(state)) return state;
            const entry = state.history[event.index];
            if (!entry) return state;
            return {
                ...state,
                phase: "Review",
                code: entry.priorCode,
                blocks: null,
                banner: null,
                diagnostics: [],
                history: recorded(state, "restore", "ok", event.at, state.code),
            };
        }
    }
}

// A tiny observable store; main.ts subscribes the renderer to it.
export class Store {
    private listeners: Array<(state: SessionState) => void> = [];

    constructor(public state: SessionState = initialState) {}

    dispatch(event: SessionEvent): SessionState {
        this.state = reducer(this.state, event);
        for (const listener of this.listeners) listener(this.state);
        return this.state;
    }

    subscribe(listener: (state: SessionState) => void): void {
        this.listeners.push(listener);
    }
}
