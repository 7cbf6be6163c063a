import type {
  EditAction,
  JobRecord,
  OptimizeResult,
  PortfolioDocument,
} from '../src/types.js';

/** The six-project teaching portfolio the service tests also use. */
export function toyDocument(): PortfolioDocument {
  return structuredClone(TOY);
}

const TOY: PortfolioDocument = {
  label: 'toy',
  families: [
    { family_key: 'F1', option_keys: ['F1.0', 'F1.1'], mandated: false },
    { family_key: 'F2', option_keys: ['F2.0', 'F2.1', 'F2.2'], mandated: false },
  ],
  options: [
    { option_key: 'F1.0', family_key: 'F1', project_refs: [], value_schedule: { '1': 0.0 }, mandated: false, disabled: false },
    { option_key: 'F1.1', family_key: 'F1', project_refs: ['P1', 'P2'], value_schedule: { '1': 0.4 }, mandated: false, disabled: false },
    { option_key: 'F2.0', family_key: 'F2', project_refs: [], value_schedule: { '1': 0.0 }, mandated: false, disabled: false },
    { option_key: 'F2.1', family_key: 'F2', project_refs: ['P2', 'P3', 'P4'], value_schedule: { '1': 0.5 }, mandated: false, disabled: false },
    { option_key: 'F2.2', family_key: 'F2', project_refs: ['P5', 'P6'], value_schedule: { '1': 0.3 }, mandated: false, disabled: false },
  ],
  projects: [
    { variant_key: 'P1', project_id: 'P1', name: 'P1', mandated: true, fixed_in_time: false, preferred_start: 1, earliest_start: 1, latest_start: 3, cost_profile: [3000, 2300] },
    { variant_key: 'P2', project_id: 'P2', name: 'P2', mandated: false, fixed_in_time: true, preferred_start: 2, earliest_start: 1, latest_start: 4, cost_profile: [0, 1500] },
    { variant_key: 'P3', project_id: 'P3', name: 'P3', mandated: false, fixed_in_time: true, preferred_start: 1, earliest_start: 1, latest_start: 1, cost_profile: [-660, -1000] },
    { variant_key: 'P4', project_id: 'P4', name: 'P4', mandated: false, fixed_in_time: true, preferred_start: 1, earliest_start: 1, latest_start: 1, cost_profile: [1200, 800] },
    { variant_key: 'P5', project_id: 'P5', name: 'P5', mandated: false, fixed_in_time: false, preferred_start: 2, earliest_start: 2, latest_start: 2, cost_profile: [900] },
    { variant_key: 'P6', project_id: 'P6', name: 'P6', mandated: false, fixed_in_time: true, preferred_start: 3, earliest_start: 2, latest_start: 4, cost_profile: [500, 500] },
  ],
  budget: [1, 2, 3, 4, 5].map((year) => ({
    year, budget: 6000, under_slack: 8000, over_slack: 2000,
  })),
};

/** Service output for the toy with F2.2 mandated, captured verbatim. */
export function mandateF22Result(): OptimizeResult {
  return structuredClone(MANDATE_F22_RESULT);
}

const MANDATE_F22_RESULT: OptimizeResult = {
  status: 'optimal',
  value: 0.7,
  bound: 0.7,
  gap: 0.0,
  nodes: 1,
  wall_time: 0.0028,
  selected_options: [
    { option_key: 'F1.1', family_key: 'F1', effective_year: 4, value: 0.4 },
    { option_key: 'F2.2', family_key: 'F2', effective_year: 5, value: 0.3 },
  ],
  selected_projects: [
    { variant_key: 'P1', start_year: 1, end_year: 2 },
    { variant_key: 'P2', start_year: 2, end_year: 3 },
    { variant_key: 'P5', start_year: 2, end_year: 2 },
    { variant_key: 'P6', start_year: 3, end_year: 4 },
  ],
  spend: [
    { year: 1, budget: 6000, under_slack: 8000, over_slack: 2000, spend: 3000 },
    { year: 2, budget: 6000, under_slack: 8000, over_slack: 2000, spend: 3200 },
    { year: 3, budget: 6000, under_slack: 8000, over_slack: 2000, spend: 2000 },
    { year: 4, budget: 6000, under_slack: 8000, over_slack: 2000, spend: 500 },
    { year: 5, budget: 6000, under_slack: 8000, over_slack: 2000, spend: 0 },
  ],
  violated_rows: [],
  violated_years: [],
};

interface MockCall {
  method: string;
  path: string;
  body: unknown;
}

/**
 * In-memory stand-in for the service, installed as a fetch stub.
 * Versions fork the stored document the same way the server does for
 * the mandate/disable actions; jobs report 'running' once before
 * 'done' so polling actually polls.
 */
export class MockService {
  calls: MockCall[] = [];
  result: OptimizeResult = mandateF22Result();
  failJob = false;
  private versions = new Map<string, PortfolioDocument>();
  private jobPolls = new Map<string, number>();
  private seq = 0;

  fetch = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = String(input);
    const path = url.replace(/^https?:\/\/[^/]+/, '');
    const method = init?.method ?? 'GET';
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    this.calls.push({ method, path, body });
    return this.route(method, path, body);
  };

  callsTo(pattern: RegExp): MockCall[] {
    return this.calls.filter((c) => pattern.test(c.path));
  }

  private json(status: number, payload: unknown): Response {
    return new Response(JSON.stringify(payload), {
      status,
      headers: { 'Content-Type': 'application/json' },
    });
  }

  private route(method: string, path: string, body: unknown): Response {
    let m: RegExpMatchArray | null;
    if (method === 'POST' && path === '/portfolios') {
      const id = `v-${++this.seq}`;
      this.versions.set(id, body as PortfolioDocument);
      return this.json(201, { version_id: id, parent_id: null, created_at: 'now' });
    }
    if (method === 'POST' && (m = path.match(/^\/portfolios\/([^/]+)\/edits$/))) {
      const parent = this.versions.get(m[1]);
      if (!parent) return this.json(404, { error: 'unknown-version', message: `no version '${m[1]}'` });
      const edits = (body as { edits: EditAction[] }).edits;
      const doc = structuredClone(parent);
      for (const edit of edits) {
        const opt = doc.options.find(
          (o) => 'option_key' in edit && o.option_key === edit.option_key,
        );
        if (!opt) return this.json(400, { error: 'unknown-key', message: 'bad edit' });
        if (edit.action === 'mandate_option') {
          if (opt.disabled) {
            return this.json(409, {
              error: 'mandate-disabled',
              message: `option '${opt.option_key}' is disabled; cannot mandate`,
            });
          }
          opt.mandated = true;
        } else if (edit.action === 'disable_option') {
          if (opt.mandated) {
            return this.json(409, {
              error: 'disable-mandated',
              message: `option '${opt.option_key}' is mandated; cannot disable`,
            });
          }
          opt.disabled = true;
        }
      }
      const id = `v-${++this.seq}`;
      this.versions.set(id, doc);
      return this.json(201, { version_id: id, parent_id: m[1], created_at: 'now' });
    }
    if (method === 'GET' && (m = path.match(/^\/portfolios\/([^/]+)$/))) {
      const doc = this.versions.get(m[1]);
      if (!doc) return this.json(404, { error: 'unknown-version', message: `no version '${m[1]}'` });
      return this.json(200, {
        version_id: m[1], parent_id: null, created_at: 'now', edits: [], document: doc,
      });
    }
    if (method === 'POST' && (m = path.match(/^\/portfolios\/([^/]+)\/optimize$/))) {
      if (!this.versions.has(m[1])) {
        return this.json(404, { error: 'unknown-version', message: `no version '${m[1]}'` });
      }
      const jobId = `j-${++this.seq}`;
      this.jobPolls.set(jobId, 0);
      return this.json(202, { job_id: jobId, version_id: m[1], state: 'queued' });
    }
    if (method === 'GET' && (m = path.match(/^\/jobs\/([^/]+)$/))) {
      const polls = this.jobPolls.get(m[1]);
      if (polls === undefined) return this.json(404, { error: 'unknown-job', message: 'no job' });
      this.jobPolls.set(m[1], polls + 1);
      const base = { job_id: m[1], version_id: 'v-1', created_at: 'now' };
      if (polls === 0) return this.json(200, { ...base, state: 'running', result: null } as JobRecord);
      if (this.failJob) {
        return this.json(200, { ...base, state: 'failed', result: null, error: 'boom' } as JobRecord);
      }
      return this.json(200, { ...base, state: 'done', result: this.result } as JobRecord);
    }
    return this.json(404, { error: 'unknown-route', message: `${method} ${path}` });
  }
}
