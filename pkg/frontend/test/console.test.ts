import { describe, expect, it, vi } from "vitest";

import { ApiClient, stepBody } from "../src/api";
import { blockBoundaries, linearScale, linePath, ribbonPath } from "../src/chart";
import { cumulativeRewards, ledgerCheck, sumRewards } from "../src/ledger";
import {
  fanIsOrdered,
  parseSessionView,
  parseWhatIf,
  SessionView,
} from "../src/schema";
import { SessionController } from "../src/state";

function sampleView(partial: Partial<SessionView> = {}): SessionView {
  const rewards = [-10.5, -12.25, -9.75];
  const base: SessionView = {
    id: "abc123",
    status: "awaiting_decision",
    planner: "threshold",
    block: 1,
    n_blocks: 3,
    delta: 10,
    day: 23,
    y_current: 140,
    recommendation: { action: 2, artifact: { thresholds: [100, 500, 1500] } },
    beta_quantiles: [
      [0.2, 0.15, 0.1, 0.05],
      [0.3, 0.2, 0.12, 0.07],
      [0.4, 0.3, 0.2, 0.1],
    ],
    trace: {
      day: [20, 21, 22],
      y: [100, 120, 140],
      action: [2, 2, 2],
      ell: [1, 2, 3],
      reward: rewards,
    },
    total_reward: sumRewards(rewards),
    overrides: [false],
    config: {
      t_horizon: 30, delta: 10, seed: 0, planner: "threshold",
      kappa_soec: 0.2, population: 100000,
    },
  };
  return { ...base, ...partial };
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("schema contract", () => {
  it("accepts a well-formed session view", () => {
    expect(() => parseSessionView(sampleView())).not.toThrow();
  });

  it("rejects out-of-range actions", () => {
    const view = sampleView();
    (view.trace.action as number[])[0] = 9;
    expect(() => parseSessionView(view)).toThrow();
  });

  it("rejects a missing trace field", () => {
    const view = sampleView() as Record<string, unknown>;
    delete (view.trace as Record<string, unknown>).reward;
    expect(() => parseSessionView(view)).toThrow();
  });
});

describe("reward ledger", () => {
  it("client-side total equals the sum of daily rewards exactly", () => {
    const view = sampleView();
    const check = ledgerCheck(view);
    expect(check.consistent).toBe(true);
    expect(check.total).toBe(view.trace.reward.reduce((a, b) => a + b, 0));
  });

  it("flags a service total that disagrees", () => {
    const view = sampleView({ total_reward: -1 });
    expect(ledgerCheck(view).consistent).toBe(false);
  });

  it("cumulative ledger matches a running sum", () => {
    expect(cumulativeRewards([-1, -2, -3])).toEqual([-1, -3, -6]);
    expect(cumulativeRewards([])).toEqual([]);
  });
});

describe("decision submission", () => {
  it("accept sends the recommended-action body", async () => {
    const calls: Array<{ url: string; init?: RequestInit }> = [];
    const fetchFn = vi.fn(async (url: string, init?: RequestInit) => {
      calls.push({ url, init });
      return jsonResponse(sampleView({ block: 2 }));
    });
    const api = new ApiClient("http://svc", fetchFn);
    await api.step("abc123", "recommended");
    expect(calls[0].url).toBe("http://svc/sessions/abc123/step");
    expect(calls[0].init?.body).toBe('{"action":"recommended"}');
    expect(stepBody("recommended")).toBe('{"action":"recommended"}');
  });

  it("override sends the numeric action body", async () => {
    const fetchFn = vi.fn(async () => jsonResponse(sampleView({ block: 2 })));
    const api = new ApiClient("http://svc", fetchFn);
    await api.step("abc123", 4);
    const body = (fetchFn.mock.calls[0][1] as RequestInit).body;
    expect(body).toBe('{"action":4}');
    expect(stepBody(4)).toBe('{"action":4}');
  });

  it("rapid double-click produces exactly one step request", async () => {
    let resolveStep: (r: Response) => void = () => {};
    const pendingStep = new Promise<Response>((res) => (resolveStep = res));
    const fetchFn = vi.fn(async (url: string) => {
      if (url.endsWith("/step")) return pendingStep;
      return jsonResponse(sampleView());
    });
    const controller = new SessionController(new ApiClient("http://svc", fetchFn));
    await controller.create({});  // loads sampleView via POST /sessions
    fetchFn.mockClear();

    const first = controller.submitDecision("recommended");
    const second = controller.submitDecision("recommended");  // double click
    resolveStep(jsonResponse(sampleView({ block: 2 })));
    const [ok1, ok2] = await Promise.all([first, second]);

    const stepCalls = fetchFn.mock.calls.filter(([u]) =>
      String(u).endsWith("/step"));
    expect(stepCalls.length).toBe(1);
    expect(ok1).toBe(true);
    expect(ok2).toBe(false);
    expect(controller.submittedSteps).toBe(1);
  });

  it("refuses to submit when the session is finished", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse(sampleView({ status: "finished", recommendation: null })));
    const controller = new SessionController(new ApiClient("http://svc", fetchFn));
    await controller.create({});
    fetchFn.mockClear();
    expect(await controller.submitDecision("recommended")).toBe(false);
    expect(fetchFn.mock.calls.length).toBe(0);
  });
});

describe("what-if fans", () => {
  const fan = (scale: number) => ({
    icu_q05: [10, 20, 30].map((v) => v * scale),
    icu_q50: [15, 25, 35].map((v) => v * scale),
    icu_q95: [20, 30, 40].map((v) => v * scale),
    expected_return: -100 * scale,
  });

  it("parses and preserves quantile ordering per action", () => {
    const doc = {
      horizon: 3, k: 4, block: 1,
      per_action: { "1": fan(1), "2": fan(2), "3": fan(3), "4": fan(4) },
    };
    const parsed = parseWhatIf(doc);
    for (const a of ["1", "2", "3", "4"] as const) {
      expect(fanIsOrdered(parsed.per_action[a])).toBe(true);
    }
  });

  it("detects crossing ribbons", () => {
    const bad = fan(1);
    bad.icu_q05[1] = 999;
    expect(fanIsOrdered(bad)).toBe(false);
  });

  it("badge ordering matches service returns field by field", () => {
    const doc = {
      horizon: 3, k: 4, block: 0,
      per_action: { "1": fan(1), "2": fan(2), "3": fan(3), "4": fan(4) },
    };
    const parsed = parseWhatIf(doc);
    const returns = (["1", "2", "3", "4"] as const).map(
      (a) => parsed.per_action[a].expected_return);
    expect(returns).toEqual([-100, -200, -300, -400]);
    expect(Math.max(...returns)).toBe(parsed.per_action["1"].expected_return);
  });

  it("hides the panel on wrong-status responses", async () => {
    const fetchFn = vi.fn(async (url: string) => {
      if (url.endsWith("/whatif")) {
        return jsonResponse({ code: "wrong-status", message: "finished" }, 409);
      }
      return jsonResponse(sampleView());
    });
    const controller = new SessionController(new ApiClient("http://svc", fetchFn));
    await controller.create({});
    await controller.pollWhatif();
    expect(controller.snapshot().whatif).toBeNull();
    expect(controller.snapshot().error).toBeNull();
  });
});

describe("chart geometry", () => {
  it("empty trace still yields a day-0 boundary", () => {
    expect(blockBoundaries(20, 30, 10)).toEqual([20, 30, 40]);
    expect(linePath([], [], linearScale(0, 1, 0, 1), linearScale(0, 1, 0, 1)))
      .toBe("");
  });

  it("line path walks through scaled points", () => {
    const sx = linearScale(0, 10, 0, 100);
    const sy = linearScale(0, 10, 100, 0);
    expect(linePath([0, 10], [0, 10], sx, sy)).toBe("M0.00,100.00L100.00,0.00");
  });

  it("ribbon closes back along the lower series", () => {
    const s = linearScale(0, 1, 0, 1);
    const d = ribbonPath([0, 1], [1, 1], [2, 2], s, s);
    expect(d.startsWith("M")).toBe(true);
    expect(d.endsWith("Z")).toBe(true);
  });

  it("schema failure marks the console as broken", async () => {
    const fetchFn = vi.fn(async () => jsonResponse({ nonsense: true }));
    const controller = new SessionController(new ApiClient("http://svc", fetchFn));
    await controller.create({});
    expect(controller.snapshot().schemaBroken).toBe(true);
  });
});
