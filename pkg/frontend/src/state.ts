import type {
  EditAction,
  OptimizeResult,
  PortfolioDocument,
  VersionRecord,
} from './types.js';

export interface ProjectRow {
  variantKey: string;
  projectId: string;
  mandated: boolean;
  locked: boolean;
  window: [number, number];
  selected: boolean;
  startYear: number | null;
}

export interface OptionRow {
  key: string;
  familyKey: string;
  baseValue: number;
  mandated: boolean;
  disabled: boolean;
  pendingMandate: boolean;
  pendingDisable: boolean;
  selected: boolean;
  effectiveYear: number | null;
  projects: ProjectRow[];
}

export interface FamilyRow {
  key: string;
  mandated: boolean;
  expanded: boolean;
  conflict: boolean;
  options: OptionRow[];
}

export interface ChartPoint {
  year: number;
  budget: number;
  lo: number;
  hi: number;
  spend: number | null;
}

function firstValue(schedule: Record<string, number>): number {
  const years = Object.keys(schedule).map(Number).sort((a, b) => a - b);
  return years.length ? schedule[String(years[0])] : 0;
}

/**
 * View-model for one loaded version: the document as the service
 * returned it, plus local pending edits that have not been submitted.
 * Pending edits are sent as a single batch, so each optimize creates
 * exactly one fork.
 */
export class Workbench {
  doc: PortfolioDocument | null = null;
  versionId: string | null = null;
  lastResult: OptimizeResult | null = null;
  gapTolerance = 0;

  private expanded = new Set<string>();
  private pendingMandates = new Set<string>();
  private pendingDisables = new Set<string>();

  loadVersion(record: VersionRecord): void {
    this.doc = record.document;
    this.versionId = record.version_id;
    this.pendingMandates.clear();
    this.pendingDisables.clear();
    this.lastResult = null;
    for (const fam of record.document.families) this.expanded.add(fam.family_key);
  }

  adoptResult(result: OptimizeResult): void {
    this.lastResult = result;
  }

  toggleExpanded(familyKey: string): void {
    if (this.expanded.has(familyKey)) this.expanded.delete(familyKey);
    else this.expanded.add(familyKey);
  }

  toggleMandate(optionKey: string): void {
    if (this.pendingMandates.has(optionKey)) {
      this.pendingMandates.delete(optionKey);
    } else {
      this.pendingMandates.add(optionKey);
      this.pendingDisables.delete(optionKey);
    }
  }

  toggleDisable(optionKey: string): void {
    if (this.pendingDisables.has(optionKey)) {
      this.pendingDisables.delete(optionKey);
    } else {
      this.pendingDisables.add(optionKey);
      this.pendingMandates.delete(optionKey);
    }
  }

  isMandated(optionKey: string): boolean {
    const doc = this.doc?.options.find((o) => o.option_key === optionKey);
    return Boolean(doc?.mandated) || this.pendingMandates.has(optionKey);
  }

  isDisabled(optionKey: string): boolean {
    const doc = this.doc?.options.find((o) => o.option_key === optionKey);
    return Boolean(doc?.disabled) || this.pendingDisables.has(optionKey);
  }

  /** Families holding more than one mandated option; blocks submission. */
  conflictedFamilies(): string[] {
    if (!this.doc) return [];
    const out: string[] = [];
    for (const fam of this.doc.families) {
      const mandated = fam.option_keys.filter((k) => this.isMandated(k));
      if (mandated.length > 1) out.push(fam.family_key);
    }
    return out;
  }

  hasPendingEdits(): boolean {
    return this.editBatch().length > 0;
  }

  /** One atomic batch, skipping toggles the document already satisfies. */
  editBatch(): EditAction[] {
    const batch: EditAction[] = [];
    if (!this.doc) return batch;
    const byKey = new Map(this.doc.options.map((o) => [o.option_key, o]));
    for (const key of [...this.pendingMandates].sort()) {
      if (!byKey.get(key)?.mandated) batch.push({ action: 'mandate_option', option_key: key });
    }
    for (const key of [...this.pendingDisables].sort()) {
      if (!byKey.get(key)?.disabled) batch.push({ action: 'disable_option', option_key: key });
    }
    return batch;
  }

  treeFamilies(): FamilyRow[] {
    if (!this.doc) return [];
    const doc = this.doc;
    const selectedOptions = new Map(
      (this.lastResult?.selected_options ?? []).map((s) => [s.option_key, s]),
    );
    const selectedProjects = new Map(
      (this.lastResult?.selected_projects ?? []).map((s) => [s.variant_key, s]),
    );
    const conflicts = new Set(this.conflictedFamilies());

    return doc.families.map((fam) => {
      const options = doc.options
        .filter((o) => o.family_key === fam.family_key)
        .map((o): OptionRow => {
          const sel = selectedOptions.get(o.option_key);
          const projects = doc.projects
            .filter((p) => o.project_refs.includes(p.project_id))
            .map((p): ProjectRow => {
              const psel = selectedProjects.get(p.variant_key);
              return {
                variantKey: p.variant_key,
                projectId: p.project_id,
                mandated: p.mandated,
                locked: p.fixed_in_time,
                window: [p.earliest_start, p.latest_start],
                selected: Boolean(psel),
                startYear: psel ? psel.start_year : null,
              };
            });
          return {
            key: o.option_key,
            familyKey: o.family_key,
            baseValue: firstValue(o.value_schedule),
            mandated: this.isMandated(o.option_key),
            disabled: this.isDisabled(o.option_key),
            pendingMandate: this.pendingMandates.has(o.option_key),
            pendingDisable: this.pendingDisables.has(o.option_key),
            selected: Boolean(sel),
            effectiveYear: sel ? sel.effective_year : null,
            projects,
          };
        });
      return {
        key: fam.family_key,
        mandated: fam.mandated,
        expanded: this.expanded.has(fam.family_key),
        conflict: conflicts.has(fam.family_key),
        options,
      };
    });
  }

  /** One point per budget year; the result's spend rows when present. */
  chartSeries(): ChartPoint[] {
    if (!this.doc) return [];
    const spendByYear = new Map(
      (this.lastResult?.spend ?? []).map((row) => [row.year, row.spend]),
    );
    return [...this.doc.budget]
      .sort((a, b) => a.year - b.year)
      .map((line) => ({
        year: line.year,
        budget: line.budget,
        lo: line.budget - line.under_slack,
        hi: line.budget + line.over_slack,
        spend: this.lastResult ? (spendByYear.get(line.year) ?? 0) : null,
      }));
  }
}
