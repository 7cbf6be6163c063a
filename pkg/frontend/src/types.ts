/**
 * Wire types for the portfolio service. Field names match the JSON the
 * service emits, so everything here is snake_case.
 */

export interface FamilyDoc {
  family_key: string;
  option_keys: string[];
  mandated: boolean;
}

export interface OptionDoc {
  option_key: string;
  family_key: string;
  project_refs: string[];
  value_schedule: Record<string, number>;
  mandated: boolean;
  disabled: boolean;
}

export interface ProjectDoc {
  variant_key: string;
  project_id: string;
  name: string;
  mandated: boolean;
  fixed_in_time: boolean;
  preferred_start: number;
  earliest_start: number;
  latest_start: number;
  cost_profile: number[];
}

export interface BudgetLineDoc {
  year: number;
  budget: number;
  under_slack: number;
  over_slack: number;
}

export interface PortfolioDocument {
  label: string;
  families: FamilyDoc[];
  options: OptionDoc[];
  projects: ProjectDoc[];
  budget: BudgetLineDoc[];
}

export type EditAction =
  | { action: 'mandate_option' | 'disable_option'; option_key: string }
  | { action: 'mandate_project'; project_id: string }
  | { action: 'lock_project'; project_id: string; year: number };

export interface VersionInfo {
  version_id: string;
  parent_id: string | null;
  created_at: string;
}

export interface VersionRecord extends VersionInfo {
  edits: EditAction[];
  document: PortfolioDocument;
}

export interface SolveRequestOptions {
  gap_tolerance?: number;
  time_limit?: number | null;
  node_limit?: number | null;
}

export interface SelectedOption {
  option_key: string;
  family_key: string;
  effective_year: number;
  value: number;
}

export interface SelectedProject {
  variant_key: string;
  start_year: number;
  end_year: number;
}

export interface SpendRow {
  year: number;
  budget: number;
  under_slack: number;
  over_slack: number;
  spend: number;
}

export interface OptimizeResult {
  status: string;
  value: number | null;
  bound: number | null;
  gap: number | null;
  nodes: number;
  wall_time: number;
  selected_options: SelectedOption[];
  selected_projects: SelectedProject[];
  spend: SpendRow[];
  violated_rows: string[];
  violated_years: number[];
}

export type JobState = 'queued' | 'running' | 'done' | 'failed';

export interface JobRecord {
  job_id: string;
  version_id: string;
  created_at: string;
  state: JobState;
  result: OptimizeResult | null;
  error?: string | null;
}
