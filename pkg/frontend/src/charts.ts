/** Dependency-free SVG bar charts. Inputs are the already-normalized
 * vectors from the API (h1..h24 proportions, t/ts means in [0,1]); this
 * module only maps values to rectangle heights. */

const SVG_NS = "http://www.w3.org/2000/svg";

export interface BarChartOptions {
  width?: number;
  height?: number;
  labelEvery?: number;
  labels?: (i: number) => string;
  title: string;
}

export function barChart(values: number[], opts: BarChartOptions): SVGSVGElement {
  const width = opts.width ?? 480;
  const height = opts.height ?? 120;
  const labelEvery = opts.labelEvery ?? 1;
  const pad = { top: 16, bottom: 16, left: 4, right: 4 };
  const plotW = width - pad.left - pad.right;
  const plotH = height - pad.top - pad.bottom;
  const max = Math.max(...values, 1e-12);
  const barW = plotW / Math.max(values.length, 1);

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("role", "img");
  svg.setAttribute("class", "chart");

  const titleEl = document.createElementNS(SVG_NS, "text");
  titleEl.setAttribute("x", String(pad.left));
  titleEl.setAttribute("y", "11");
  titleEl.setAttribute("class", "chart-title");
  titleEl.textContent = opts.title;
  svg.appendChild(titleEl);

  values.forEach((v, i) => {
    const h = (Math.max(v, 0) / max) * plotH;
    const rect = document.createElementNS(SVG_NS, "rect");
    rect.setAttribute("x", String(pad.left + i * barW + 1));
    rect.setAttribute("y", String(pad.top + plotH - h));
    rect.setAttribute("width", String(Math.max(barW - 2, 1)));
    rect.setAttribute("height", String(h));
    rect.setAttribute("class", "bar");
    rect.setAttribute("data-value", v.toPrecision(4));
    svg.appendChild(rect);

    if (i % labelEvery === 0) {
      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("x", String(pad.left + i * barW + barW / 2));
      label.setAttribute("y", String(height - 4));
      label.setAttribute("text-anchor", "middle");
      label.setAttribute("class", "chart-label");
      label.textContent = opts.labels ? opts.labels(i) : String(i + 1);
      svg.appendChild(label);
    }
  });
  return svg;
}

export function hourHistogram(h: number[]): SVGSVGElement {
  return barChart(h, { title: "appearance hours (proportion)", labelEvery: 3, labels: (i) => `${i}h` });
}

export function attributeMeans(t: number[], kind: "class" | "score"): SVGSVGElement {
  const title = kind === "class" ? "attribute classification rates t1..t22" : "attribute score means ts1..ts22";
  return barChart(t, { title, labelEvery: 3 });
}

/** Daily boarded+alighted totals over the detection window. */
export function flowSeries(points: { date: string; in: number; out: number }[]): SVGSVGElement {
  return barChart(
    points.map((p) => p.in + p.out),
    {
      title: "daily flow over window",
      labelEvery: 7,
      labels: (i) => points[i].date.slice(5),
    },
  );
}
