import * as fs from "node:fs";
import * as path from "node:path";
import { describe, expect, it, vi } from "vitest";

import { main } from "../src/cli.js";
import { tempDir } from "./helpers.js";

const FIXTURE: Record<string, string> = {
  "TOY_A.txt": "1, 2\n2, 1\n",
  "TOY_graph_indicator.txt": "1\n1\n2\n",
  "TOY_graph_labels.txt": "0\n1\n",
};

function writeFixture(): string {
  const dir = tempDir("cli-src-");
  for (const [name, text] of Object.entries(FIXTURE)) {
    fs.writeFileSync(path.join(dir, name), text);
  }
  return dir;
}

function captureStdout(): { text: () => string; restore: () => void } {
  let buffer = "";
  const spy = vi
    .spyOn(process.stdout, "write")
    .mockImplementation((chunk: unknown) => {
      buffer += String(chunk);
      return true;
    });
  return { text: () => buffer, restore: () => spy.mockRestore() };
}

describe("converter CLI", () => {
  it("emits a conversion report as JSON", () => {
    const out = tempDir("cli-out-");
    const capture = captureStdout();
    const code = main(["tu", writeFixture(), out, "--name", "toy"]);
    capture.restore();
    expect(code).toBe(0);
    const report = JSON.parse(capture.text());
    expect(report.dataset).toBe("toy");
    expect(report.graphs).toBe(2);
    expect(fs.existsSync(path.join(out, "meta.json"))).toBe(true);
  });

  it("verifies --expect statistics", () => {
    const out = tempDir("cli-out-");
    const expectFile = path.join(tempDir("cli-exp-"), "expected.json");
    fs.writeFileSync(expectFile, JSON.stringify({ nodes: 3, graphs: 2, classes: 2 }));
    const capture = captureStdout();
    const code = main(["tu", writeFixture(), out, "--name", "toy", "--expect", expectFile]);
    capture.restore();
    expect(code).toBe(0);

    fs.writeFileSync(expectFile, JSON.stringify({ nodes: 99 }));
    const capture2 = captureStdout();
    const code2 = main(["tu", writeFixture(), out, "--name", "toy", "--expect", expectFile]);
    capture2.restore();
    expect(code2).toBe(1);
  });

  it("returns 2 on unusable input", () => {
    const capture = captureStdout();
    const code = main(["tu", "/does/not/exist", tempDir("cli-out-"), "--name", "x"]);
    capture.restore();
    expect(code).toBe(2);
  });
});
