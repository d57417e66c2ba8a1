import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

/** Run the primary toolchain's validator against a converted directory. */
export function gkValidate(dir: string): { code: number; stdout: string; stderr: string } {
  const proc = spawnSync("python3", ["-m", "sgk.cli", "dataset-validate", dir], {
    encoding: "utf8",
  });
  return { code: proc.status ?? -1, stdout: proc.stdout, stderr: proc.stderr };
}

export function tempDir(prefix: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), prefix));
}

export function readDirBytes(dir: string): Record<string, Buffer> {
  const out: Record<string, Buffer> = {};
  for (const name of fs.readdirSync(dir).sort()) {
    out[name] = fs.readFileSync(path.join(dir, name));
  }
  return out;
}
