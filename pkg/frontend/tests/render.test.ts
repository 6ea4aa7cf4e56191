import { describe, expect, it } from "vitest";

import {
  escapeHtml,
  formatMoney,
  renderActionMenu,
  renderBookPane,
  renderEarnings,
  renderError,
  renderFinalScore,
  renderObservationFeed,
  renderTaskStrip,
  renderTruthMenu,
  renderVerdict,
} from "../src/render.js";
import { easyView, earnings, finalScore } from "./fixtures.js";

describe("escapeHtml", () => {
  it("neutralizes markup in server-provided names", () => {
    expect(escapeHtml(`<img onerror="x">&'`)).toBe(
      "&lt;img onerror=&quot;x&quot;&gt;&amp;&#39;",
    );
  });
});

describe("action menu", () => {
  it("renders six enabled actions for a fresh easy task", () => {
    const html = renderActionMenu(easyView(), false);
    expect(html.match(/class="action-btn"/g)).toHaveLength(6);
    expect(html).not.toContain("disabled");
  });

  it("marks used actions and disables them", () => {
    const view = easyView();
    view.current!.actions[1]!.used = true;
    const html = renderActionMenu(view, false);
    expect(html).toContain("(used)");
    expect(html.match(/ disabled/g)).toHaveLength(1);
  });

  it("disables everything while a request is in flight", () => {
    const html = renderActionMenu(easyView(), true);
    expect(html.match(/ disabled/g)).toHaveLength(6);
  });
});

describe("truth menu", () => {
  it("renders the four candidates with predict controls", () => {
    const html = renderTruthMenu(easyView(), false);
    expect(html.match(/class="truth-btn"/g)).toHaveLength(4);
    expect(html).toContain("data-truth=\"Leak\"");
  });
});

describe("observation feed", () => {
  it("lists observations in order with the action count", () => {
    const view = easyView();
    view.current!.observations = [
      { action: "Probe A", observation: "finding-0" },
      { action: "Probe C", observation: "finding-1" },
    ];
    view.current!.action_count = 2;
    const html = renderObservationFeed(view);
    expect(html.indexOf("Probe A")).toBeLessThan(html.indexOf("Probe C"));
    expect(html).toContain("Actions this task: 2");
  });
});

describe("book pane", () => {
  it("shows the book with task position", () => {
    const html = renderBookPane("When Probe A yields finding-0, rule out: Leak.",
      easyView());
    expect(html).toContain("Task 1 of 10");
    expect(html).toContain("rule out: Leak.");
  });
});

describe("task strip and verdict", () => {
  it("marks done tasks by outcome", () => {
    const view = easyView();
    view.tasks[0]!.done = true;
    view.tasks[0]!.outcome = "success";
    view.tasks[1]!.done = true;
    view.tasks[1]!.outcome = "wrong_prediction";
    const html = renderTaskStrip(view);
    expect(html).toContain("task-ok");
    expect(html).toContain("task-bad");
  });

  it("renders verdicts both ways", () => {
    expect(renderVerdict("success", true)).toContain("Correct!");
    expect(renderVerdict("wrong_prediction", false)).toContain("wrong_prediction");
    expect(renderVerdict(null, null)).toBe("");
  });
});

describe("earnings", () => {
  it("formats components to the cent", () => {
    const html = renderEarnings(earnings);
    expect(html).toContain("25.00");
    expect(html).toContain("15.00");
    expect(html).toContain("-3.00");
    expect(html).toContain("37.00");
  });

  it("renders the final score block", () => {
    const html = renderFinalScore(finalScore);
    expect(html).toContain("Task set complete");
    expect(html).toContain("100%");
    expect(html).toContain("30 actions");
  });

  it("formatMoney keeps two decimals", () => {
    expect(formatMoney(34)).toBe("34.00");
    expect(formatMoney(36.96)).toBe("36.96");
  });
});

describe("errors", () => {
  it("renders a retry affordance", () => {
    const html = renderError("transport failure: fetch failed");
    expect(html).toContain("retry-btn");
    expect(html).toContain("transport failure");
  });
});
