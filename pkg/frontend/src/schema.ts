// Contract mirror of the decision service JSON, validated with zod so a
// drifting server surfaces as a schema banner instead of silent NaNs.
import { z } from "zod";

export const TraceSchema = z.object({
  day: z.array(z.number().int()),
  y: z.array(z.number().int().nonnegative()),
  action: z.array(z.number().int().min(1).max(4)),
  ell: z.array(z.number().int().nonnegative()),
  reward: z.array(z.number()),
});

export const RecommendationSchema = z.object({
  action: z.number().int().min(1).max(4),
  artifact: z.record(z.unknown()),
});

export const SessionViewSchema = z.object({
  id: z.string(),
  status: z.enum(["awaiting_decision", "advancing", "finished"]),
  planner: z.string(),
  block: z.number().int().nonnegative(),
  n_blocks: z.number().int().positive(),
  delta: z.number().int().positive(),
  day: z.number().int().nonnegative(),
  y_current: z.number().int().nonnegative(),
  recommendation: RecommendationSchema.nullable(),
  beta_quantiles: z.array(z.array(z.number()).length(4)).length(3).nullable(),
  trace: TraceSchema,
  total_reward: z.number(),
  overrides: z.array(z.boolean()),
  config: z.object({
    t_horizon: z.number().int(),
    delta: z.number().int(),
    seed: z.number().int(),
    planner: z.string(),
    kappa_soec: z.number(),
    population: z.number().int(),
  }),
});

export const ActionFanSchema = z.object({
  icu_q05: z.array(z.number()),
  icu_q50: z.array(z.number()),
  icu_q95: z.array(z.number()),
  expected_return: z.number(),
});

export const WhatIfSchema = z.object({
  horizon: z.number().int().positive(),
  k: z.number().int().positive(),
  block: z.number().int().nonnegative(),
  per_action: z.object({
    "1": ActionFanSchema,
    "2": ActionFanSchema,
    "3": ActionFanSchema,
    "4": ActionFanSchema,
  }),
});

export type SessionView = z.infer<typeof SessionViewSchema>;
export type WhatIf = z.infer<typeof WhatIfSchema>;
export type ActionFan = z.infer<typeof ActionFanSchema>;

export function parseSessionView(data: unknown): SessionView {
  return SessionViewSchema.parse(data);
}

export function parseWhatIf(data: unknown): WhatIf {
  return WhatIfSchema.parse(data);
}

/** Quantile ribbons must never cross within an action. */
export function fanIsOrdered(fan: ActionFan): boolean {
  return fan.icu_q05.every(
    (lo, i) => lo <= fan.icu_q50[i] && fan.icu_q50[i] <= fan.icu_q95[i],
  );
}
