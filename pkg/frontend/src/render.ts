// Pure HTML-string renderers. Keeping these free of document access makes
// every visual rule testable without a DOM.

import type { BlockDocument, DesignerNode, Diagnostic } from "./api.js";
import type { ErrorBanner, HistoryEntry, SessionState } from "./state.js";

export function escapeHtml(text: string): string {
    return text
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}

export function renderOutline(node: DesignerNode): string {
    const children = node.children ?? [];
    const label =
        `<span class="component-name">${escapeHtml(node.name)}</span> ` +
        `<span class="component-type">${escapeHtml(node.type)}</span>`;
    if (children.length === 0) {
        return `<li>${label}</li>`;
    }
    const inner = children.map(renderOutline).join("");
    return `<li><details open><summary>${label}</summary><ul>${inner}</ul></details></li>`;
}

export function renderDesigner(blocks: BlockDocument): string {
    return (
        `<div class="preview">` +
        renderBlockBadge(blocks.workspace.length) +
        `<ul class="outline">${renderOutline(blocks.designer)}</ul>` +
        `</div>`
    );
}

export function renderBlockBadge(count: number): string {
    return `<span class="badge">${count} block${count === 1 ? "" : "s"}</span>`;
}

const BANNER_TITLES: Record<ErrorBanner["kind"], string> = {
    "invalid-input": "Your code or description was rejected",
    "model-output-failed": "The model's output could not be used",
    "backend-unreachable": "The code generation backend is unreachable",
    "transport-failed": "The Aptly service could not be reached",
};

export function renderBanner(banner: ErrorBanner | null): string {
    if (banner === null) return "";
    const codes = banner.codes.map(
        (code) => `<code class="diag-code">${escapeHtml(code)}</code>`,
    );
    const raw = banner.rawCompletions.length
        ? `<details><summary>raw model output (${banner.rawCompletions.length} attempts)</summary>` +
          banner.rawCompletions
              .map((text) => `<pre class="raw">${escapeHtml(text)}</pre>`)
              .join("") +
          `</details>`
        : "";
    return (
        `<div class="banner banner-${banner.kind}">` +
        `<strong>${BANNER_TITLES[banner.kind]}</strong> ` +
        codes.join(" ") +
        `<p>${escapeHtml(banner.message)}</p>` +
        raw +
        `</div>`
    );
}

export function renderAnnotatedCode(code: string, diagnostics: Diagnostic[]): string {
    const byLine = new Map<number, Diagnostic[]>();
    for (const diag of diagnostics) {
        const bucket = byLine.get(diag.line) ?? [];
        bucket.push(diag);
        byLine.set(diag.line, bucket);
    }
    const rows = code.split("\n").map((line, index) => {
        const lineno = index + 1;
        const marks = (byLine.get(lineno) ?? [])
            .map(
                (d) =>
                    `<div class="inline-diag" data-line="${lineno}">` +
                    `<code>${escapeHtml(d.code)}</code> ${escapeHtml(d.message)}</div>`,
            )
            .join("");
        return (
            `<div class="code-line${marks ? " has-diag" : ""}">` +
            `<span class="lineno">${lineno}</span>` +
            `<span class="source">${escapeHtml(line)}</span></div>` +
            marks
        );
    });
    return `<div class="annotated-code">${rows.join("")}</div>`;
}

export function renderHistory(entries: HistoryEntry[]): string {
    if (entries.length === 0) return `<p class="history-empty">No actions yet.</p>`;
    const rows = entries
        .map(
            (entry, index) =>
                `<li><button class="restore" data-index="${index}">restore</button> ` +
                `<span class="action">${escapeHtml(entry.action)}</span> ` +
                `<span class="outcome">${escapeHtml(entry.outcome)}</span></li>`,
        )
        .join("");
    return `<ol class="history">${rows}</ol>`;
}

export function renderBusy(state: SessionState, now: number): string {
    if (state.busySince === null) return "";
    const seconds = Math.max(0, Math.round((now - state.busySince) / 1000));
    const verb = state.phase === "Compiling" ? "Compiling" : "Generating";
    return `<div class="busy">${verb}… ${seconds}s</div>`;
}
