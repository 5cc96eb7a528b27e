/** Thin DOM layer: paints a PageViewModel into a container. All chart logic
 * lives in the pure view builders; this file only creates elements. */

import type { Dashboard, PageViewModel } from "./dashboard.js";

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

function section(title: string, ...children: HTMLElement[]): HTMLElement {
  const wrap = el("section", "panel");
  wrap.appendChild(el("h2", undefined, title));
  for (const child of children) wrap.appendChild(child);
  return wrap;
}

function statsHeader(page: PageViewModel): HTMLElement {
  const row = el("div", "stats-row");
  for (const tile of page.stats?.tiles ?? []) {
    const box = el("div", "stat-tile");
    box.appendChild(el("div", "stat-value", tile.value));
    box.appendChild(el("div", "stat-label", tile.label));
    row.appendChild(box);
  }
  return row;
}

function rq1Chart(page: PageViewModel, dashboard: Dashboard): HTMLElement {
  const wrap = el("div");
  const controls = el("div", "range-controls");
  const lo = el("input") as HTMLInputElement;
  lo.type = "number";
  lo.value = String(page.rq1.range.lo);
  const hi = el("input") as HTMLInputElement;
  hi.type = "number";
  hi.value = String(page.rq1.range.hi);
  const apply = el("button", undefined, "Apply R0 range");
  apply.onclick = () => void dashboard.setR0Range(Number(lo.value), Number(hi.value));
  controls.append("R0 from ", lo, " to ", hi, apply);
  wrap.appendChild(controls);

  if (page.rq1.placeholder) {
    wrap.appendChild(el("p", "placeholder", page.rq1.placeholder));
    return wrap;
  }
  const chart = el("div", "bar-chart");
  for (const bar of page.rq1.bars) {
    const column = el("div", "bar-column");
    const rect = el("div", "bar");
    rect.style.height = `${bar.heightPct}%`;
    rect.title = bar.tooltip;
    rect.onclick = bar.onClick;
    column.appendChild(rect);
    column.appendChild(el("div", "bar-label", bar.disease));
    chart.appendChild(column);
  }
  wrap.appendChild(chart);
  return wrap;
}

function diseasePicker(page: PageViewModel, dashboard: Dashboard): HTMLElement {
  const wrap = el("div", "disease-picker");
  const input = el("input") as HTMLInputElement;
  input.setAttribute("list", "disease-options");
  input.placeholder = "type a disease name";
  input.value = dashboard.state.selectedDisease ?? "";
  const options = el("datalist") as HTMLDataListElement;
  options.id = "disease-options";
  for (const disease of page.diseaseOptions) {
    const option = el("option") as HTMLOptionElement;
    option.value = disease;
    options.appendChild(option);
  }
  input.onchange = () => void dashboard.chooseDisease(input.value);
  wrap.append(input, options);
  return wrap;
}

function rq2Chart(page: PageViewModel): HTMLElement {
  const wrap = el("div");
  if (page.rq2.emptyPrompt) {
    wrap.appendChild(el("p", "placeholder", page.rq2.emptyPrompt));
    return wrap;
  }
  for (const bar of page.rq2.bars) {
    const row = el("div", "hbar-row");
    row.appendChild(el("span", "hbar-label", bar.country));
    const rect = el("div", "hbar");
    rect.style.width = `${bar.widthPct}%`;
    rect.onclick = bar.onClick;
    rect.title = `${bar.country}: ${bar.studyCount}`;
    row.appendChild(rect);
    row.appendChild(el("span", "hbar-count", String(bar.studyCount)));
    wrap.appendChild(row);
  }
  return wrap;
}

function rq3Chart(page: PageViewModel): HTMLElement {
  const wrap = el("div");
  if (page.rq3.emptyPrompt) {
    wrap.appendChild(el("p", "placeholder", page.rq3.emptyPrompt));
    return wrap;
  }
  const chart = el("div", "bar-chart");
  for (const stack of page.rq3.stacks) {
    const column = el("div", "bar-column");
    const rect = el("div", "stack");
    rect.style.height = `${stack.spanPct}%`;
    rect.style.marginBottom = `${stack.basePct}%`;
    rect.title = stack.tooltip;
    rect.onclick = stack.onClick;
    column.appendChild(rect);
    column.appendChild(el("div", "bar-label", stack.country));
    chart.appendChild(column);
  }
  wrap.appendChild(chart);
  return wrap;
}

function rq4Map(page: PageViewModel, dashboard: Dashboard): HTMLElement {
  const wrap = el("div");
  const controls = el("div", "map-controls");
  const input = el("input") as HTMLInputElement;
  input.setAttribute("list", "disease-options");
  input.placeholder = "add a disease (max 3)";
  const add = el("button", undefined, "Add to map");
  add.onclick = () => {
    void dashboard.addMapDisease(input.value).then((ok) => {
      if (ok) input.value = "";
    });
  };
  controls.append(input, add);
  wrap.appendChild(controls);

  if (page.rq4.message) {
    wrap.appendChild(el("p", "map-message", page.rq4.message));
  }
  const legend = el("div", "legend");
  for (const entry of page.rq4.legend) {
    const item = el("span", "legend-item");
    const swatch = el("span", "swatch");
    swatch.style.background = entry.color;
    const remove = el("button", "remove", "x");
    remove.onclick = entry.onRemove;
    item.append(swatch, ` ${entry.disease} `, remove);
    legend.appendChild(item);
  }
  wrap.appendChild(legend);

  // equirectangular placement: x from longitude, y from latitude
  const map = el("div", "world-map");
  for (const marker of page.rq4.markers) {
    const dot = el("div", "marker");
    dot.style.left = `${((marker.longitude + 180) / 360) * 100}%`;
    dot.style.top = `${((90 - marker.latitude) / 180) * 100}%`;
    dot.style.width = `${marker.radius * 2}px`;
    dot.style.height = `${marker.radius * 2}px`;
    dot.style.background = marker.color;
    dot.title = marker.tooltip;
    dot.onclick = marker.onClick;
    map.appendChild(dot);
  }
  wrap.appendChild(map);
  return wrap;
}

function papersTable(page: PageViewModel, dashboard: Dashboard): HTMLElement {
  const wrap = el("div");
  const search = el("input") as HTMLInputElement;
  search.placeholder = "keyword";
  search.value = page.papers?.query ?? "";
  search.onchange = () => void dashboard.setPapersQuery(search.value);
  wrap.appendChild(search);

  const table = el("table", "papers");
  const head = el("tr");
  for (const name of ["PMID", "Title", "Year"]) head.appendChild(el("th", undefined, name));
  table.appendChild(head);
  for (const row of page.papers?.rows ?? []) {
    const tr = el("tr");
    const link = el("a", undefined, row.pmid) as HTMLAnchorElement;
    link.href = row.pubmedUrl;
    link.target = "_blank";
    const pmidCell = el("td");
    pmidCell.appendChild(link);
    tr.appendChild(pmidCell);
    tr.appendChild(el("td", undefined, row.title));
    tr.appendChild(el("td", undefined, row.pubYear === null ? "" : String(row.pubYear)));
    table.appendChild(tr);
  }
  wrap.appendChild(table);

  if (page.papers) {
    const nav = el("div", "pager");
    const prev = el("button", undefined, "prev");
    prev.disabled = page.papers.page <= 1;
    prev.onclick = () => void dashboard.setPapersPage(page.papers!.page - 1);
    const next = el("button", undefined, "next");
    next.disabled = page.papers.page >= page.papers.pageCount;
    next.onclick = () => void dashboard.setPapersPage(page.papers!.page + 1);
    nav.append(prev, ` ${page.papers.page} / ${page.papers.pageCount} (${page.papers.total} papers) `, next);
    wrap.appendChild(nav);
  }
  return wrap;
}

function drilldownPanel(page: PageViewModel, dashboard: Dashboard): HTMLElement {
  const wrap = el("aside", "drilldown");
  if (!page.drilldown) return wrap;
  const close = el("button", "close", "close");
  close.onclick = () => dashboard.closeDrilldown();
  wrap.appendChild(close);
  wrap.appendChild(el("h3", undefined, page.drilldown.heading));
  if (page.drilldown.empty) {
    wrap.appendChild(el("p", "placeholder", "no publications"));
    return wrap;
  }
  const list = el("ul");
  for (const link of page.drilldown.links) {
    const item = el("li");
    const anchor = el("a", undefined, `${link.title} (PMID ${link.pmid})`) as HTMLAnchorElement;
    anchor.href = link.pubmedUrl;
    anchor.target = "_blank";
    item.appendChild(anchor);
    list.appendChild(item);
  }
  wrap.appendChild(list);
  return wrap;
}

export function mountPage(container: HTMLElement, page: PageViewModel, dashboard: Dashboard): void {
  container.replaceChildren();
  if (page.error) {
    container.appendChild(el("div", "error-banner", page.error));
  }
  container.appendChild(statsHeader(page));
  container.appendChild(diseasePicker(page, dashboard));
  const grid = el("div", "chart-grid");
  grid.appendChild(section("Max R0 by disease", rq1Chart(page, dashboard)));
  grid.appendChild(section("Studies by location", rq2Chart(page)));
  grid.appendChild(section("R0 range by location", rq3Chart(page)));
  grid.appendChild(section("World map", rq4Map(page, dashboard)));
  container.appendChild(grid);
  container.appendChild(section("Papers", papersTable(page, dashboard)));
  container.appendChild(drilldownPanel(page, dashboard));
}
