/**
 * CLI: `main.js serve` runs the bridge server on stdio;
 * `main.js train <plan> --out-archive A --out-log L [--warm W]` trains once.
 */

import { serve } from "./bridge.js";
import { runTrainingPlanFile } from "./train.js";

async function main(): Promise<number> {
  const [command, ...rest] = process.argv.slice(2);
  if (command === "serve") {
    await serve();
    return 0;
  }
  if (command === "train") {
    const [planPath, ...args] = rest;
    if (!planPath) {
      process.stderr.write("usage: main.js train <plan> --out-archive A --out-log L [--warm W]\n");
      return 2;
    }
    const summary = await runTrainingPlanFile(planPath, args);
    process.stdout.write(`final_acc=${summary.finalMetric.toFixed(4)}\n`);
    return 0;
  }
  process.stderr.write("usage: main.js serve | train <plan> [options]\n");
  return 2;
}

main().then(
  (code) => process.exit(code),
  (err) => {
    process.stderr.write(String(err instanceof Error ? err.stack : err) + "\n");
    process.exit(1);
  },
);
