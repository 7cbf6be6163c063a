import type { FamilyRow, OptionRow, ProjectRow } from './state.js';

export interface TreeHandlers {
  onToggleExpand?: (familyKey: string) => void;
  onToggleMandate?: (optionKey: string) => void;
  onToggleDisable?: (optionKey: string) => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function badge(text: string): HTMLElement {
  return el('span', `badge badge-${text}`, text);
}

function renderProject(row: ProjectRow): HTMLElement {
  const li = el('li', 'project');
  li.dataset.key = row.variantKey;
  if (row.locked) li.classList.add('locked');
  if (row.mandated) li.classList.add('mandated');
  if (row.selected) li.classList.add('selected');

  const label = row.selected && row.startYear !== null
    ? `${row.variantKey} (starts ${row.startYear})`
    : `${row.variantKey} (window ${row.window[0]}..${row.window[1]})`;
  li.append(el('span', 'label', label));
  if (row.locked) li.append(badge('locked'));
  if (row.mandated) li.append(badge('mandated'));
  if (row.selected) li.append(badge('selected'));
  return li;
}

function renderOption(row: OptionRow, handlers: TreeHandlers): HTMLElement {
  const li = el('li', 'option');
  li.dataset.key = row.key;
  if (row.mandated) li.classList.add('mandated');
  if (row.disabled) li.classList.add('disabled');
  if (row.selected) li.classList.add('selected');

  const head = el('div', 'option-head');
  const label = row.selected && row.effectiveYear !== null
    ? `${row.key}  value ${row.baseValue} from year ${row.effectiveYear}`
    : `${row.key}  value ${row.baseValue}`;
  head.append(el('span', 'label', label));
  if (row.mandated) head.append(badge('mandated'));
  if (row.disabled) head.append(badge('disabled'));
  if (row.selected) head.append(badge('selected'));

  const mandateBtn = el('button', 'act-mandate', row.pendingMandate ? 'unqueue mandate' : 'mandate');
  mandateBtn.addEventListener('click', () => handlers.onToggleMandate?.(row.key));
  const disableBtn = el('button', 'act-disable', row.pendingDisable ? 'unqueue disable' : 'disable');
  disableBtn.addEventListener('click', () => handlers.onToggleDisable?.(row.key));
  head.append(mandateBtn, disableBtn);
  li.append(head);

  if (row.projects.length) {
    const ul = el('ul', 'projects');
    for (const project of row.projects) ul.append(renderProject(project));
    li.append(ul);
  }
  return li;
}

/**
 * Render the family -> option -> project hierarchy into `host`.
 * State classes (mandated / disabled / locked / selected / conflict)
 * land on the list items so styling and tests key off them.
 */
export function renderTree(host: HTMLElement, families: FamilyRow[], handlers: TreeHandlers = {}): void {
  host.textContent = '';
  if (!families.length) {
    host.append(el('p', 'empty', 'No portfolio loaded. Ingest a document to begin.'));
    return;
  }

  const root = el('ul', 'families');
  for (const fam of families) {
    const li = el('li', 'family');
    li.dataset.key = fam.key;
    if (fam.conflict) li.classList.add('conflict');

    const head = el('div', 'family-head');
    const expander = el('button', 'expander', fam.expanded ? '-' : '+');
    expander.addEventListener('click', () => handlers.onToggleExpand?.(fam.key));
    head.append(expander, el('span', 'label', fam.key));
    if (fam.mandated) head.append(badge('mandated'));
    if (fam.conflict) {
      head.append(el('span', 'conflict-msg',
        'two options mandated in this family; unqueue one to submit'));
    }
    li.append(head);

    if (fam.expanded) {
      const ul = el('ul', 'options');
      for (const option of fam.options) ul.append(renderOption(option, handlers));
      li.append(ul);
    }
    root.append(li);
  }
  host.append(root);
}
