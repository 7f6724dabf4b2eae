// Async flows bridging the state machine and the API client. Each flow
// dispatches the STARTED event, performs exactly one request, and dispatches
// the completion event; the reducer's guards keep requests from overlapping.

import { ApiClient } from "./api.js";
import { canCodeIt, canEdit, canMakeIt, Store } from "./state.js";

export class Controller {
    constructor(
        private readonly store: Store,
        private readonly api: ApiClient,
        private readonly clock: () => number = Date.now,
    ) {}

    async codeIt(): Promise<void> {
        const state = this.store.state;
        if (!canCodeIt(state)) return;
        this.store.dispatch({ type: "CODE_IT_STARTED", at: this.clock() });
        const result = await this.api.generate(state.description, state.model);
        if (result.kind === "ok") {
            this.store.dispatch({
                type: "GENERATE_OK",
                code: result.value.code,
                at: this.clock(),
            });
        } else {
            this.store.dispatch({
                type: "GENERATE_FAILED",
                failure: result,
                at: this.clock(),
            });
        }
    }

    async makeIt(): Promise<void> {
        const state = this.store.state;
        if (!canMakeIt(state)) return;
        this.store.dispatch({ type: "MAKE_IT_STARTED", at: this.clock() });
        const result = await this.api.compile(this.store.state.code);
        if (result.kind === "ok") {
            this.store.dispatch({
                type: "COMPILE_OK",
                blocks: result.value.blocks,
                at: this.clock(),
            });
        } else if (result.kind === "invalid-input") {
            this.store.dispatch({
                type: "COMPILE_FAILED",
                diagnostics: result.diagnostics,
                at: this.clock(),
            });
        } else {
            // Compile has no model in the loop; anything else is transport.
            this.store.dispatch({
                type: "COMPILE_FAILED",
                diagnostics: [],
                at: this.clock(),
            });
        }
    }

    async edit(instruction: string): Promise<void> {
        const state = this.store.state;
        if (!canEdit(state) || instruction.trim().length === 0) return;
        this.store.dispatch({
            type: "EDIT_STARTED",
            instruction,
            at: this.clock(),
        });
        const result = await this.api.edit(state.code, instruction, state.model);
        if (result.kind === "ok") {
            this.store.dispatch({
                type: "EDIT_OK",
                code: result.value.code,
                at: this.clock(),
            });
        } else {
            this.store.dispatch({
                type: "EDIT_FAILED",
                failure: result,
                at: this.clock(),
            });
        }
    }

    restore(index: number): void {
        this.store.dispatch({ type: "RESTORE", index, at: this.clock() });
    }
}
