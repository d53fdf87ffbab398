/** DOM/SVG rendering of a DocumentView plus the working sentence. */

import type { EditorState } from "./editor.js";
import type { Connector, DocumentView } from "./layout.js";

const TAG_CLASSES = ["OK", "REP", "INS", "DEL", "BAD"];

function tokenSpan(text: string, tag: string, cls: string, key: string): HTMLElement {
  const span = document.createElement("span");
  span.textContent = text;
  span.className = `token ${cls} tag-${TAG_CLASSES.includes(tag) ? tag : "OK"}`;
  span.dataset.key = key;
  span.title = tag;
  return span;
}

function centerOf(el: Element, container: Element): { x: number; y: number } {
  const rect = el.getBoundingClientRect();
  const base = container.getBoundingClientRect();
  return { x: rect.left - base.left + rect.width / 2,
           y: rect.top - base.top + rect.height / 2 };
}

function connectorPath(from: { x: number; y: number },
                       to: { x: number; y: number }): string {
  const midY = (from.y + to.y) / 2;
  return `M ${from.x} ${from.y} C ${from.x} ${midY}, ${to.x} ${midY}, `
    + `${to.x} ${to.y}`;
}

export function renderDocument(container: HTMLElement, view: DocumentView): void {
  container.textContent = "";
  container.classList.add("document");

  if (view.banner) {
    const banner = document.createElement("div");
    banner.className = "banner";
    banner.textContent = view.banner;
    container.appendChild(banner);
  }

  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.classList.add("connectors");
  container.appendChild(svg);

  const sourceRow = document.createElement("div");
  sourceRow.className = "row source-row";
  for (const cell of view.source) {
    sourceRow.appendChild(tokenSpan(cell.text, cell.tag, "source-token",
                                    `s-${cell.index}`));
  }
  container.appendChild(sourceRow);

  const mtRow = document.createElement("div");
  mtRow.className = "row mt-row";
  for (let k = 0; k < view.gaps.length; k++) {
    const gap = document.createElement("span");
    gap.className = `gap tag-${view.gaps[k].tag === "INS" ? "INS" : "OK"}`;
    gap.dataset.key = `g-${k}`;
    gap.title = `gap ${k}: ${view.gaps[k].tag}`;
    mtRow.appendChild(gap);
    if (k < view.mt.length) {
      const cell = view.mt[k];
      mtRow.appendChild(tokenSpan(cell.text, cell.tag, "mt-token",
                                  `m-${cell.index}`));
    }
  }
  container.appendChild(mtRow);

  // connectors need laid-out geometry, so draw after insertion
  requestAnimationFrame(() => drawConnectors(container, svg, view.connectors));
}

export function drawConnectors(container: HTMLElement, svg: SVGSVGElement,
                               connectors: Connector[]): void {
  svg.textContent = "";
  svg.setAttribute("width", String(container.clientWidth));
  svg.setAttribute("height", String(container.clientHeight));
  for (const conn of connectors) {
    const fromEl = container.querySelector(`[data-key="s-${conn.srcIndex}"]`);
    const toEl = container.querySelector(
      conn.toGap ? `[data-key="g-${conn.mtIndex}"]` : `[data-key="m-${conn.mtIndex}"]`);
    if (!fromEl || !toEl) continue;
    const path = document.createElementNS("http://www.w3.org/2000/svg", "path");
    path.setAttribute("d", connectorPath(centerOf(fromEl, container),
                                         centerOf(toEl, container)));
    path.setAttribute("stroke", conn.color);
    path.setAttribute("fill", "none");
    path.setAttribute("stroke-width", conn.kind === "align" ? "1" : "2");
    if (conn.kind === "align") path.setAttribute("stroke-dasharray", "4 3");
    svg.appendChild(path);
  }
}

export function renderWorking(container: HTMLElement, state: EditorState): void {
  container.textContent = "";
  for (const token of state.workingMt) {
    const span = document.createElement("span");
    span.className = "token working-token";
    span.textContent = token;
    container.appendChild(span);
  }
}
