import { describe, expect, it } from "vitest";

import { attributeMeans, barChart, flowSeries, hourHistogram } from "../src/charts.js";

describe("barChart", () => {
  it("renders one rect per value", () => {
    const svg = barChart([0.1, 0.5, 0.4], { title: "t" });
    expect(svg.querySelectorAll("rect")).toHaveLength(3);
  });

  it("scales the tallest bar to the full plot height", () => {
    const svg = barChart([1, 2, 4], { title: "t", height: 120 });
    const heights = [...svg.querySelectorAll("rect")].map((r) =>
      parseFloat(r.getAttribute("height")!),
    );
    expect(heights[2]).toBeGreaterThan(heights[1]);
    expect(heights[1]).toBeCloseTo(heights[2] / 2, 5);
    expect(heights[0]).toBeCloseTo(heights[2] / 4, 5);
  });

  it("survives an all-zero vector", () => {
    const svg = barChart([0, 0, 0], { title: "t" });
    for (const r of svg.querySelectorAll("rect")) {
      expect(parseFloat(r.getAttribute("height")!)).toBe(0);
    }
  });

  it("keeps raw values on the bars for inspection", () => {
    const svg = barChart([0.123456], { title: "t" });
    expect(svg.querySelector("rect")!.getAttribute("data-value")).toBe("0.1235");
  });
});

describe("domain charts", () => {
  it("hour histogram renders 24 bins with hour labels", () => {
    const h = Array.from({ length: 24 }, (_, i) => (i === 8 ? 1 : 0));
    const svg = hourHistogram(h);
    expect(svg.querySelectorAll("rect")).toHaveLength(24);
    const labels = [...svg.querySelectorAll("text")].map((t) => t.textContent);
    expect(labels).toContain("0h");
    expect(labels).toContain("21h");
  });

  it("attribute charts render 22 bins", () => {
    const t = Array.from({ length: 22 }, () => 0.5);
    expect(attributeMeans(t, "class").querySelectorAll("rect")).toHaveLength(22);
    expect(attributeMeans(t, "score").querySelectorAll("rect")).toHaveLength(22);
  });

  it("flow series plots in+out totals", () => {
    const svg = flowSeries([
      { date: "2021-03-01", in: 3, out: 1 },
      { date: "2021-03-02", in: 0, out: 8 },
    ]);
    const values = [...svg.querySelectorAll("rect")].map((r) =>
      parseFloat(r.getAttribute("data-value")!),
    );
    expect(values).toEqual([4, 8]);
  });
});
