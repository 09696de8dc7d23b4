// Thin client over the serve endpoints. The UI performs no diffing and no
// clustering of its own; everything comes from these four routes.

import type { ClusteringDocument, SessionDocument } from './state.js';

export class ApiError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
  }
}

async function asJson(response: Response): Promise<unknown> {
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const detail = (body as { error?: string }).error ?? response.statusText;
    throw new ApiError(detail, response.status);
  }
  return body;
}

export class Client {
  constructor(readonly baseUrl: string = '') {}

  async loadSession(): Promise<SessionDocument> {
    const response = await fetch(`${this.baseUrl}/api/session`);
    return (await asJson(response)) as SessionDocument;
  }

  async loadClustering(): Promise<ClusteringDocument> {
    const response = await fetch(`${this.baseUrl}/api/clustering`);
    return (await asJson(response)) as ClusteringDocument;
  }

  async submitClustering(document: ClusteringDocument): Promise<void> {
    const response = await fetch(`${this.baseUrl}/api/clustering`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(document),
    });
    await asJson(response);
  }

  async score(a: string, b: string): Promise<number> {
    const query = new URLSearchParams({ a, b });
    const response = await fetch(`${this.baseUrl}/api/score?${query}`);
    const body = (await asJson(response)) as { probability: number };
    return body.probability;
  }
}
