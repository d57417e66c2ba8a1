import * as fs from "node:fs";
import * as path from "node:path";
import { describe, expect, it } from "vitest";

import { convertCitation } from "../src/citation.js";
import { gkValidate, readDirBytes, tempDir } from "./helpers.js";

const CONTENT = [
  "paper_a\t1\t0\t1\tml",
  "paper_b\t0\t1\t0\tdb",
  "paper_c\t1\t1\t0\tml",
  "paper_d\t0\t0\t1\tdb",
].join("\n") + "\n";

const CITES = [
  "paper_a\tpaper_b",
  "paper_b\tpaper_a", // reciprocal duplicate collapses
  "paper_c\tpaper_a",
  "paper_d\tpaper_ghost", // dangling reference is skipped
].join("\n") + "\n";

function writeFixture(withSplits = false): string {
  const dir = tempDir("cite-src-");
  fs.writeFileSync(path.join(dir, "toy.content"), CONTENT);
  fs.writeFileSync(path.join(dir, "toy.cites"), CITES);
  if (withSplits) {
    fs.writeFileSync(
      path.join(dir, "toy.splits.json"),
      JSON.stringify({ train: ["paper_a", "paper_b"], val: [2], test: ["paper_d"] }),
    );
  }
  return path.join(dir, "toy");
}

describe("citation converter", () => {
  it("converts content/cites text files", () => {
    const out = tempDir("cite-out-");
    const report = convertCitation(writeFixture(), out, "toy-citations");
    expect(report).toMatchObject({
      dataset: "toy-citations",
      level: "node",
      nodes: 4,
      edges: 2,
      graphs: 1,
      classes: 2,
      feature_dim: 3,
    });
    const meta = JSON.parse(fs.readFileSync(path.join(out, "meta.json"), "utf8"));
    // class names map in sorted order: db -> 0, ml -> 1
    expect(meta.labels).toEqual([1, 0, 1, 0]);
  });

  it("embeds the splits sidecar by id or index", () => {
    const out = tempDir("cite-out-");
    convertCitation(writeFixture(true), out, "toy-citations");
    const meta = JSON.parse(fs.readFileSync(path.join(out, "meta.json"), "utf8"));
    expect(meta.splits).toEqual({ train: [0, 1], val: [2], test: [3] });
  });

  it("passes the primary validator with zero warnings", () => {
    const out = tempDir("cite-out-");
    convertCitation(writeFixture(true), out, "toy-citations");
    const result = gkValidate(out);
    expect(result.stderr).toBe("");
    expect(result.code).toBe(0);
    expect(JSON.parse(result.stdout).splits).toEqual({ train: 2, val: 1, test: 1 });
  });

  it("is byte-identical across runs", () => {
    const stem = writeFixture(true);
    const a = tempDir("cite-out-");
    const b = tempDir("cite-out-");
    convertCitation(stem, a, "toy");
    convertCitation(stem, b, "toy");
    const bytesA = readDirBytes(a);
    const bytesB = readDirBytes(b);
    for (const name of Object.keys(bytesA)) {
      expect(bytesA[name].equals(bytesB[name]), name).toBe(true);
    }
  });

  it("rejects ragged feature rows", () => {
    const dir = tempDir("cite-src-");
    fs.writeFileSync(path.join(dir, "bad.content"), "a\t1\t0\tml\nb\t1\tdb\n");
    fs.writeFileSync(path.join(dir, "bad.cites"), "");
    expect(() =>
      convertCitation(path.join(dir, "bad"), tempDir("cite-out-"), "bad"),
    ).toThrow(/line 2/);
  });

  it("rejects duplicate paper ids", () => {
    const dir = tempDir("cite-src-");
    fs.writeFileSync(path.join(dir, "dup.content"), "a\t1\tml\na\t0\tdb\n");
    fs.writeFileSync(path.join(dir, "dup.cites"), "");
    expect(() =>
      convertCitation(path.join(dir, "dup"), tempDir("cite-out-"), "dup"),
    ).toThrow(/duplicate paper id/);
  });

  it("rejects unknown split members", () => {
    const dir = tempDir("cite-src-");
    fs.writeFileSync(path.join(dir, "s.content"), "a\t1\tml\nb\t0\tdb\n");
    fs.writeFileSync(path.join(dir, "s.cites"), "");
    fs.writeFileSync(path.join(dir, "s.splits.json"), '{"train": ["nope"]}');
    expect(() =>
      convertCitation(path.join(dir, "s"), tempDir("cite-out-"), "s"),
    ).toThrow(/unknown paper id/);
  });

  it("rejects missing inputs", () => {
    expect(() =>
      convertCitation("/does/not/exist", tempDir("cite-out-"), "x"),
    ).toThrow(/not found/);
  });
});
