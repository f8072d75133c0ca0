/**
 * Insight cart views. Vis-node carts render the stat table plus grouped
 * fact checkboxes; text-node carts render streamed fact groups. All strings
 * come from server payloads; the cart never rewrites or invents fact text.
 */

import { escapeAttr, escapeText } from './widgets/base.js';
import { Fact, Hierarchy, TextCart } from './wire.js';

function statCell(value: number): string {
  return escapeText(Number.isInteger(value) ? String(value) : value.toFixed(4));
}

export class VisCartView {
  selected = new Set<string>();
  staleNotice = false;

  constructor(public hierarchy: Hierarchy) {}

  /** Client-side toggling; the server applies replace semantics on checkout. */
  toggle(factId: string): void {
    if (this.selected.has(factId)) this.selected.delete(factId);
    else this.selected.add(factId);
  }

  toggleGroup(factType: string, attribute: string): void {
    const ids = this.groupFactIds(factType, attribute);
    const allSelected = ids.every((id) => this.selected.has(id));
    for (const id of ids) {
      if (allSelected) this.selected.delete(id);
      else this.selected.add(id);
    }
  }

  groupFactIds(factType: string, attribute: string): string[] {
    const out: string[] = [];
    for (const group of this.hierarchy.factTypeGroups) {
      if (group.factType !== factType) continue;
      for (const attrGroup of group.attributeGroups) {
        if (attrGroup.attribute !== attribute) continue;
        for (const fact of attrGroup.facts) if (fact.id) out.push(fact.id);
      }
    }
    return out;
  }

  selectionPayload(): string[] {
    return [...this.selected].sort();
  }

  /** Replace the hierarchy after a new callout; stale selections vanish. */
  refresh(hierarchy: Hierarchy): void {
    this.hierarchy = hierarchy;
    this.selected.clear();
    this.staleNotice = false;
  }

  markStale(): void {
    this.staleNotice = true;
  }

  private statTableHtml(): string {
    const rows = this.hierarchy.statTable.attributes
      .map((entry) => {
        const cells = (['count', 'mean', 'median', 'min', 'max', 'std'] as const)
          .map(
            (key) =>
              `<td class="stat-cell" data-attr="${escapeAttr(entry.attribute)}" data-stat="${key}">` +
              `${statCell(entry.selection[key])}</td>`,
          )
          .join('');
        return `<tr><th>${escapeText(entry.attribute)}</th>${cells}</tr>`;
      })
      .join('');
    return (
      '<table class="stat-table"><thead><tr><th></th><th>count</th><th>mean</th>' +
      '<th>median</th><th>min</th><th>max</th><th>std</th></tr></thead>' +
      `<tbody>${rows}</tbody></table>`
    );
  }

  private factHtml(fact: Fact): string {
    const id = fact.id ?? '';
    const checked = this.selected.has(id) ? ' checked' : '';
    return (
      `<li><label><input type="checkbox" data-fact-id="${escapeAttr(id)}"${checked}>` +
      `<span class="fact-text">${escapeText(fact.templateText)}</span>` +
      `<span class="fact-score">${fact.score.toFixed(2)}</span></label></li>`
    );
  }

  html(): string {
    const stale = this.staleNotice
      ? '<div class="stale-banner">Facts changed on the server; refresh the cart.</div>'
      : '';
    const groups = this.hierarchy.factTypeGroups
      .map((group) => {
        const attrs = group.attributeGroups
          .map(
            (attrGroup) =>
              `<details open><summary>` +
              `<input type="checkbox" class="group-toggle" ` +
              `data-fact-type="${escapeAttr(group.factType)}" data-attribute="${escapeAttr(attrGroup.attribute)}">` +
              `${escapeText(attrGroup.attribute)}</summary>` +
              `<ul>${attrGroup.facts.map((f) => this.factHtml(f)).join('')}</ul></details>`,
          )
          .join('');
        return `<section class="fact-type"><h4>${escapeText(group.factType)}</h4>${attrs}</section>`;
      })
      .join('');
    return `<div class="insight-cart vis-cart">${stale}${this.statTableHtml()}${groups}</div>`;
  }
}

export class TextCartView {
  constructor(public cart: TextCart) {}

  refresh(cart: TextCart): void {
    this.cart = cart;
  }

  factTexts(): string[] {
    return this.cart.groups.flatMap((group) => group.facts.map((fact) => fact.templateText));
  }

  html(): string {
    const groups = this.cart.groups
      .map(
        (group) =>
          `<section class="streamed-group" data-source="${escapeAttr(group.sourceNode)}">` +
          `<h5>from ${escapeText(group.sourceNode)}</h5>` +
          `<ul>${group.facts
            .map((fact) => `<li class="fact-text">${escapeText(fact.templateText)}</li>`)
            .join('')}</ul></section>`,
      )
      .join('');
    return `<div class="insight-cart text-cart">${groups}</div>`;
  }
}
