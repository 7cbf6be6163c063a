import type {
  EditAction,
  JobRecord,
  PortfolioDocument,
  SolveRequestOptions,
  VersionInfo,
  VersionRecord,
} from './types.js';

/** Error body the service attaches to 4xx/409 responses. */
export class ApiError extends Error {
  status: number;
  code: string;
  violations: unknown[];

  constructor(status: number, code: string, message: string, violations: unknown[] = []) {
    super(message);
    this.status = status;
    this.code = code;
    this.violations = violations;
  }
}

async function request<T>(baseUrl: string, path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(baseUrl + path, init);
  if (!res.ok) {
    let code = `http-${res.status}`;
    let message = res.statusText || 'request failed';
    let violations: unknown[] = [];
    try {
      const body = await res.json();
      if (body && typeof body.error === 'string') code = body.error;
      if (body && typeof body.message === 'string') message = body.message;
      if (Array.isArray(body?.violations)) violations = body.violations;
    } catch {
      // non-JSON error body, keep the status text
    }
    throw new ApiError(res.status, code, message, violations);
  }
  return res.json() as Promise<T>;
}

function post(body: unknown): RequestInit {
  return {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(body),
  };
}

/**
 * Thin client for the six service endpoints. All state lives on the
 * server; this class only shapes requests.
 */
export class ServiceClient {
  constructor(readonly baseUrl: string = '') {}

  ingest(document: PortfolioDocument): Promise<VersionInfo> {
    return request(this.baseUrl, '/portfolios', post(document));
  }

  getVersion(versionId: string): Promise<VersionRecord> {
    return request(this.baseUrl, `/portfolios/${versionId}`);
  }

  submitEdits(versionId: string, edits: EditAction[]): Promise<VersionInfo> {
    return request(this.baseUrl, `/portfolios/${versionId}/edits`, post({ edits }));
  }

  startOptimize(
    versionId: string,
    options?: SolveRequestOptions,
  ): Promise<{ job_id: string; version_id: string; state: string }> {
    return request(this.baseUrl, `/portfolios/${versionId}/optimize`, post({ options: options ?? {} }));
  }

  getJob(jobId: string): Promise<JobRecord> {
    return request(this.baseUrl, `/jobs/${jobId}`);
  }

  async exportLp(versionId: string): Promise<string> {
    const res = await fetch(`${this.baseUrl}/portfolios/${versionId}/export.lp`);
    if (!res.ok) throw new ApiError(res.status, `http-${res.status}`, 'export failed');
    return res.text();
  }
}
