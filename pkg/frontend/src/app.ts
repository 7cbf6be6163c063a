import { ApiError, ServiceClient } from './api.js';
import { renderSpendChart } from './chart.js';
import { pollJob } from './poll.js';
import { Workbench } from './state.js';
import { renderTree } from './tree.js';
import type { OptimizeResult, PortfolioDocument } from './types.js';

export interface AppOptions {
  client?: ServiceClient;
  pollIntervalMs?: number;
}

function fmtValue(v: number | null): string {
  if (v === null) return 'n/a';
  return String(Math.round(v * 1e6) / 1e6);
}

function fmtPct(fraction: number): string {
  return String(Math.round(fraction * 10000) / 100);
}

/**
 * Wire the workbench to the DOM shell in index.html. Returns the live
 * pieces so tests can drive the same wiring headlessly.
 */
export function initApp(doc: Document, options: AppOptions = {}) {
  const wb = new Workbench();
  let client = options.client ?? new ServiceClient(readBaseUrl());
  const pollIntervalMs = options.pollIntervalMs ?? 1000;

  const $ = (id: string) => {
    const node = doc.getElementById(id);
    if (!node) throw new Error(`missing #${id} in shell`);
    return node;
  };

  const tree = $('tree');
  const chart = $('chart');
  const banner = $('status-banner');
  const valueReadout = $('value-readout');
  const gapBadge = $('gap-badge');
  const jobLine = $('job-line');

  function readBaseUrl(): string {
    const input = doc.getElementById('base-url') as HTMLInputElement | null;
    return input?.value?.trim() ?? '';
  }

  function clearBanner(): void {
    banner.textContent = '';
    banner.className = '';
  }

  function showError(message: string, retry?: () => void): void {
    banner.textContent = '';
    banner.className = 'error';
    banner.append(doc.createTextNode(message));
    if (retry) {
      const btn = doc.createElement('button');
      btn.id = 'retry-btn';
      btn.textContent = 'retry';
      btn.addEventListener('click', () => {
        clearBanner();
        retry();
      });
      banner.append(' ', btn);
    }
  }

  function markOffendingOptions(message: string): void {
    // 409 messages quote the option key; light up the matching control.
    for (const option of wb.doc?.options ?? []) {
      if (message.includes(`'${option.option_key}'`)) {
        tree.querySelector(`.option[data-key="${option.option_key}"]`)
          ?.classList.add('conflict');
      }
    }
  }

  function refresh(): void {
    renderTree(tree, wb.treeFamilies(), {
      onToggleExpand: (key) => {
        wb.toggleExpanded(key);
        refresh();
      },
      onToggleMandate: (key) => {
        wb.toggleMandate(key);
        refresh();
      },
      onToggleDisable: (key) => {
        wb.toggleDisable(key);
        refresh();
      },
    });
    renderSpendChart(chart, wb.chartSeries());

    const res = wb.lastResult;
    valueReadout.textContent = res ? fmtValue(res.value) : '';
    gapBadge.textContent = res ? badgeText(res) : '';
    gapBadge.className = res ? `badge status-${res.status}` : '';
  }

  function badgeText(res: OptimizeResult): string {
    if (res.status === 'infeasible') return 'infeasible';
    if (res.value === null) return res.status.replace('_', ' ');
    if (wb.gapTolerance > 0) return `gap ≤ ${fmtPct(wb.gapTolerance)}%`;
    return res.status === 'optimal' ? 'optimal' : res.status.replace('_', ' ');
  }

  async function ingest(): Promise<void> {
    clearBanner();
    const raw = (doc.getElementById('doc-input') as HTMLTextAreaElement).value;
    let parsed: PortfolioDocument;
    try {
      parsed = JSON.parse(raw);
    } catch {
      showError('document is not valid JSON');
      return;
    }
    try {
      client = options.client ?? new ServiceClient(readBaseUrl());
      const info = await client.ingest(parsed);
      const record = await client.getVersion(info.version_id);
      wb.loadVersion(record);
      jobLine.textContent = `version ${record.version_id}`;
      refresh();
    } catch (err) {
      if (err instanceof ApiError) showError(`${err.code}: ${err.message}`);
      else showError('service unreachable', () => void ingest());
    }
  }

  async function optimize(): Promise<void> {
    clearBanner();
    if (!wb.versionId) {
      showError('ingest a portfolio first');
      return;
    }
    const conflicts = wb.conflictedFamilies();
    if (conflicts.length) {
      // Submission blocked: the conflict renders inline on the family,
      // and nothing is sent to the service.
      refresh();
      jobLine.textContent = 'fix mandate conflicts before optimizing';
      return;
    }

    const gapInput = doc.getElementById('gap-input') as HTMLInputElement | null;
    wb.gapTolerance = gapInput ? Number(gapInput.value) || 0 : 0;

    try {
      let target = wb.versionId;
      const batch = wb.editBatch();
      if (batch.length) {
        const fork = await client.submitEdits(target, batch);
        target = fork.version_id;
      }
      const job = await client.startOptimize(target, { gap_tolerance: wb.gapTolerance });
      jobLine.textContent = `job ${job.job_id} running on ${target}`;
      const finished = await pollJob(client, job.job_id, pollIntervalMs, (j) => {
        jobLine.textContent = `job ${j.job_id}: ${j.state}`;
      });
      const record = await client.getVersion(target);
      const keepTolerance = wb.gapTolerance;
      wb.loadVersion(record);
      wb.gapTolerance = keepTolerance;
      wb.adoptResult(finished.result as OptimizeResult);
      jobLine.textContent =
        `job ${finished.job_id}: ${finished.result?.status} in ${finished.result?.nodes} nodes`;
      refresh();
    } catch (err) {
      if (err instanceof ApiError) {
        showError(`${err.code}: ${err.message}`);
        markOffendingOptions(err.message);
      } else {
        showError(err instanceof Error ? err.message : 'optimize failed',
          () => void optimize());
      }
    }
  }

  let pending: Promise<void> | null = null;
  $('ingest-btn').addEventListener('click', () => {
    pending = ingest();
  });
  $('optimize-btn').addEventListener('click', () => {
    pending = optimize();
  });

  refresh();
  return {
    workbench: wb,
    refresh,
    ingest,
    optimize,
    get pending() {
      return pending;
    },
  };
}
