// Reward-ledger arithmetic. The console displays service numbers only,
// but it cross-checks the reported total against its own sum of the
// daily rewards; any mismatch is a contract violation worth a banner.
import type { SessionView } from "./schema";

export function sumRewards(rewards: number[]): number {
  return rewards.reduce((acc, r) => acc + r, 0);
}

export interface LedgerCheck {
  total: number;
  reportedTotal: number;
  consistent: boolean;
}

export function ledgerCheck(view: SessionView): LedgerCheck {
  const total = sumRewards(view.trace.reward);
  // exact agreement: both sides sum the same float64 values in order
  const consistent = total === view.total_reward;
  return { total, reportedTotal: view.total_reward, consistent };
}

export function cumulativeRewards(rewards: number[]): number[] {
  const out: number[] = [];
  let acc = 0;
  for (const r of rewards) {
    acc += r;
    out.push(acc);
  }
  return out;
}
