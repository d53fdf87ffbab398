/** Thin fetch client for the analysis service. */

import type { AnalyzeResponse, EditOpKind, EditResponse } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function postJson<T>(base: string, path: string, body: unknown): Promise<T> {
  const resp = await fetch(`${base}${path}`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  const data = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    const detail = (data as { detail?: string }).detail ?? resp.statusText;
    throw new ApiError(resp.status, detail);
  }
  return data as T;
}

export async function analyze(base: string, source: string, mt: string,
                              id?: string): Promise<AnalyzeResponse> {
  return postJson<AnalyzeResponse>(base, "/api/analyze", { source, mt, id });
}

/** Server-side edit, used only to cross-check the local editor. */
export async function editOnServer(base: string, mt: string, op: EditOpKind,
                                   index: number,
                                   payload?: string): Promise<EditResponse> {
  const body: Record<string, unknown> = { op, mt, payload };
  if (op === "INS") {
    body.gap_index = index;
  } else {
    body.mt_index = index;
  }
  return postJson<EditResponse>(base, "/api/edit", body);
}

export async function health(base: string): Promise<{ version: string }> {
  const resp = await fetch(`${base}/api/health`);
  if (!resp.ok) {
    throw new ApiError(resp.status, resp.statusText);
  }
  return (await resp.json()) as { version: string };
}
