import { nodeStatus, statusLegend, validateSnapshot } from "./state";
import type { Drafts, ChartPoint, LabelCountPoint } from "./state";
import type { NodeStatus, Snapshot } from "./types";
import { STATUS_COLORS } from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";

function svgEl<K extends keyof SVGElementTagNameMap>(
    tag: K, attrs: Record<string, string | number>): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    el.setAttribute(key, String(value));
  }
  return el;
}

function starPoints(cx: number, cy: number, r: number): string {
  const points: string[] = [];
  for (let i = 0; i < 10; i++) {
    const radius = i % 2 === 0 ? r : r / 2.4;
    const angle = (Math.PI / 5) * i - Math.PI / 2;
    points.push(`${cx + radius * Math.cos(angle)},${cy + radius * Math.sin(angle)}`);
  }
  return points.join(" ");
}

export interface MapCallbacks {
  onNodeClick?: (nodeId: number) => void;
}

/**
 * Draw the network into `container`: nodes colored by status, path edges
 * highlighted, path nodes starred, drafts outlined. A malformed snapshot
 * raises an error banner and leaves the previous drawing untouched.
 */
export function renderNetwork(container: HTMLElement, rawSnapshot: unknown,
                              drafts: Drafts = new Map(),
                              callbacks: MapCallbacks = {}): void {
  let snapshot: Snapshot;
  try {
    snapshot = validateSnapshot(rawSnapshot);
  } catch (err) {
    showBanner(container, `snapshot rejected: ${(err as Error).message}`);
    return;
  }
  clearBanner(container);

  const width = 720;
  const height = 540;
  const pad = 30;
  const xs = snapshot.nodes.map((n) => n.x);
  const ys = snapshot.nodes.map((n) => n.y);
  const minX = Math.min(...xs), maxX = Math.max(...xs);
  const minY = Math.min(...ys), maxY = Math.max(...ys);
  const sx = (x: number) =>
    pad + ((x - minX) / Math.max(maxX - minX, 1e-9)) * (width - 2 * pad);
  const sy = (y: number) =>
    pad + ((y - minY) / Math.max(maxY - minY, 1e-9)) * (height - 2 * pad);

  const svg = svgEl("svg", {
    viewBox: `0 0 ${width} ${height}`, width, height,
    "data-role": "network-map",
  });

  const byId = new Map(snapshot.nodes.map((n) => [n.id, n]));
  const pathEdges = new Set<string>();
  for (let i = 0; i + 1 < snapshot.path.length; i++) {
    pathEdges.add(`${snapshot.path[i]}-${snapshot.path[i + 1]}`);
  }
  for (const edge of snapshot.edges) {
    const a = byId.get(edge.from);
    const b = byId.get(edge.to);
    if (!a || !b) continue;
    const onPath = pathEdges.has(`${edge.from}-${edge.to}`);
    svg.appendChild(svgEl("line", {
      x1: sx(a.x), y1: sy(a.y), x2: sx(b.x), y2: sy(b.y),
      stroke: onPath ? STATUS_COLORS["on-path"] : "#dee2e6",
      "stroke-width": onPath ? 3 : 1,
      "data-edge": `${edge.from}-${edge.to}`,
      "data-on-path": String(onPath),
    }));
  }

  for (const node of snapshot.nodes) {
    const status = nodeStatus(node);
    const cx = sx(node.x);
    const cy = sy(node.y);
    const group = svgEl("g", {
      "data-node": node.id,
      "data-status": status,
      cursor: "pointer",
    });
    const circle = svgEl("circle", {
      cx, cy, r: 7,
      fill: STATUS_COLORS[status],
      stroke: drafts.has(node.id) ? "#111" : "#868e96",
      "stroke-width": drafts.has(node.id) ? 3 : 1,
      "stroke-dasharray": drafts.has(node.id) ? "3,2" : "none",
    });
    group.appendChild(circle);
    if (node.on_path) {
      group.appendChild(svgEl("polygon", {
        points: starPoints(cx, cy, 6),
        fill: "#fff",
        "pointer-events": "none",
        "data-star": node.id,
      }));
    }
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `${node.name} (#${node.id}) — ${status}`
      + (drafts.has(node.id) ? ` [pending: ${drafts.get(node.id)}]` : "");
    group.appendChild(title);
    group.addEventListener("click", () => callbacks.onNodeClick?.(node.id));
    svg.appendChild(group);
  }

  const old = container.querySelector("svg[data-role='network-map']");
  if (old) old.replaceWith(svg);
  else container.appendChild(svg);
}

export function renderLegend(container: HTMLElement): void {
  container.textContent = "";
  for (const status of statusLegend()) {
    const item = document.createElement("span");
    item.dataset.legend = status;
    item.style.marginRight = "12px";
    const dot = document.createElement("span");
    dot.style.display = "inline-block";
    dot.style.width = "10px";
    dot.style.height = "10px";
    dot.style.borderRadius = "5px";
    dot.style.marginRight = "4px";
    dot.style.background = STATUS_COLORS[status as NodeStatus];
    item.appendChild(dot);
    item.appendChild(document.createTextNode(status));
    container.appendChild(item);
  }
}

function bannerEl(container: HTMLElement): HTMLElement {
  let banner = container.querySelector<HTMLElement>("[data-role='error-banner']");
  if (!banner) {
    banner = document.createElement("div");
    banner.dataset.role = "error-banner";
    banner.style.color = "#c92a2a";
    banner.style.fontWeight = "bold";
    container.prepend(banner);
  }
  return banner;
}

export function showBanner(container: HTMLElement, message: string): void {
  const banner = bannerEl(container);
  banner.textContent = message;
  banner.style.display = "block";
}

export function clearBanner(container: HTMLElement): void {
  const banner = container.querySelector<HTMLElement>("[data-role='error-banner']");
  if (banner) banner.style.display = "none";
}

/** Minimal polyline chart; append-only series keyed by window index. */
export function renderChart(container: HTMLElement, title: string,
                            series: ChartPoint[],
                            color = "#1c7ed6"): void {
  const width = 360;
  const height = 160;
  const pad = 28;
  const svg = svgEl("svg", {
    viewBox: `0 0 ${width} ${height}`, width, height,
    "data-role": "chart", "data-title": title,
    "data-points": series.length,
  });
  svg.appendChild(svgEl("rect", {
    x: 0, y: 0, width, height, fill: "#f8f9fa",
  }));
  const label = document.createElementNS(SVG_NS, "text");
  label.setAttribute("x", "8");
  label.setAttribute("y", "16");
  label.setAttribute("font-size", "12");
  label.textContent = title;
  svg.appendChild(label);

  if (series.length > 0) {
    const windows = series.map((p) => p.window);
    const values = series.map((p) => p.value);
    const minW = Math.min(...windows), maxW = Math.max(...windows);
    const maxV = Math.max(...values, 1e-9);
    const px = (w: number) =>
      pad + ((w - minW) / Math.max(maxW - minW, 1)) * (width - 2 * pad);
    const py = (v: number) => height - pad - (v / maxV) * (height - 2 * pad);
    const points = series.map((p) => `${px(p.window)},${py(p.value)}`).join(" ");
    svg.appendChild(svgEl("polyline", {
      points, fill: "none", stroke: color, "stroke-width": 2,
    }));
    for (const p of series) {
      svg.appendChild(svgEl("circle", {
        cx: px(p.window), cy: py(p.value), r: 2.5, fill: color,
        "data-window": p.window,
      }));
    }
  }

  const old = container.querySelector(`svg[data-title='${title}']`);
  if (old) old.replaceWith(svg);
  else container.appendChild(svg);
}

export function renderLabelCounts(container: HTMLElement,
                                  series: LabelCountPoint[]): void {
  for (const [key, color] of [["leaks", STATUS_COLORS.leaky],
                              ["dangerous", STATUS_COLORS.dangerous],
                              ["safe", STATUS_COLORS.safe]] as const) {
    const sub = document.createElement("div");
    sub.dataset.series = key;
    renderChart(sub, `${key} per window`,
                series.map((p) => ({ window: p.window, value: p[key] })),
                color);
    const old = container.querySelector(`div[data-series='${key}']`);
    if (old) old.replaceWith(sub);
    else container.appendChild(sub);
  }
}
