import type { Earnings, Score, SessionView } from "../src/api.js";

export function easyView(overrides: Partial<SessionView> = {}): SessionView {
  const tasks = Array.from({ length: 10 }, (_, i) => ({
    index: i,
    domain: i % 2 ? "OrchardEnv" : "ReactorEnv",
    difficulty: i % 2 ? "hard" : "easy",
    done: false,
    outcome: null,
    action_count: null,
  }));
  return {
    session_id: "s-123",
    participant_id: "alice",
    finished: false,
    tasks,
    total_actions: 0,
    current: {
      index: 0,
      domain: "ReactorEnv",
      difficulty: "easy",
      truths: ["Leak", "Surge", "Drift", "Fault"],
      actions: [
        { name: "Probe A", used: false },
        { name: "Probe B", used: false },
        { name: "Probe C", used: false },
        { name: "Probe D", used: false },
        { name: "Probe E", used: false },
        { name: "Probe F", used: false },
      ],
      observations: [],
      action_count: 0,
    },
    ...overrides,
  };
}

export const earnings: Earnings = {
  base: 25,
  success_component: 15,
  action_penalty: 3,
  total: 37,
};

export const finalScore: Score = {
  completed: true,
  tasks_done: 10,
  success_rate: 1.0,
  action_count: 30,
  earnings,
  low_quality: false,
};
