// Typed client for the Aptly HTTP service. The fetch implementation is
// injectable so tests run with canned responses and zero network access.

export interface Diagnostic {
    code: string;
    message: string;
    line: number;
    column: number;
    length: number;
    severity: string;
}

export interface DesignerNode {
    name: string;
    type: string;
    properties?: [string, unknown][];
    children?: DesignerNode[];
}

export interface BlockDocument {
    schema_version: number;
    designer: DesignerNode;
    workspace: unknown[];
}

export interface GenerationOk {
    code: string;
    examples_used: string[];
    attempts: number;
}

// One variant per failure family the service distinguishes; the UI renders
// each as its own banner so users always know which layer failed.
export type ApiResult<T> =
    | { kind: "ok"; value: T }
    | { kind: "invalid-input"; diagnostics: Diagnostic[] }
    | {
          kind: "model-output-failed";
          diagnostics: Diagnostic[];
          rawCompletions: string[];
          attempts: number;
      }
    | { kind: "backend-unreachable"; diagnostics: Diagnostic[] }
    | { kind: "transport-failed"; message: string };

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

interface ErrorBody {
    diagnostics?: Diagnostic[];
    raw_completions?: string[];
    attempts?: number;
}

export class ApiClient {
    constructor(
        private readonly baseUrl: string = "",
        private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
    ) {}

    private async post<T>(path: string, body: unknown): Promise<ApiResult<T>> {
        let response: Response;
        try {
            response = await this.fetchImpl(this.baseUrl + path, {
                method: "POST",
                headers: { "Content-Type": "application/json" },
                body: JSON.stringify(body),
            });
        } catch (error) {
            return { kind: "transport-failed", message: String(error) };
        }

        if (response.status === 200) {
            return { kind: "ok", value: (await response.json()) as T };
        }

        let payload: ErrorBody = {};
        try {
            payload = (await response.json()) as ErrorBody;
        } catch {
            // fall through with empty diagnostics
        }
        const diagnostics = payload.diagnostics ?? [];
        if (response.status === 400) {
            return { kind: "invalid-input", diagnostics };
        }
        if (response.status === 422) {
            return {
                kind: "model-output-failed",
                diagnostics,
                rawCompletions: payload.raw_completions ?? [],
                attempts: payload.attempts ?? 0,
            };
        }
        if (response.status === 502) {
            return { kind: "backend-unreachable", diagnostics };
        }
        return {
            kind: "transport-failed",
            message: `unexpected HTTP ${response.status}`,
        };
    }

    generate(
        description: string,
        model?: string,
        k?: number,
    ): Promise<ApiResult<GenerationOk>> {
        const body: Record<string, unknown> = { description };
        if (model !== undefined) body.model = model;
        if (k !== undefined) body.k = k;
        return this.post("/v1/generate", body);
    }

    edit(
        code: string,
        instruction: string,
        model?: string,
    ): Promise<ApiResult<GenerationOk>> {
        const body: Record<string, unknown> = { code, instruction };
        if (model !== undefined) body.model = model;
        return this.post("/v1/edit", body);
    }

    compile(code: string): Promise<ApiResult<{ blocks: BlockDocument }>> {
        return this.post("/v1/compile", { code });
    }

    parse(code: string): Promise<ApiResult<{ ast_summary: Record<string, number> }>> {
        return this.post("/v1/parse", { code });
    }
}
