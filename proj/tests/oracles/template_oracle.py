"""Brute-force re-computation of the template grouping rule.

Walks each JSON tree depth-first. A mapping with at least two numeric
(non-bool) scalar children yields one group of those children; a non-empty
all-numeric list yields one group; other lists are walked element-wise.
Paths join keys and list indices with "."; the top level is "root".

Usage: python3 template_oracle.py trees.jsonl > trees.golden.json
"""
import json
import statistics
import sys


def is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def record(path, values):
    return {"Category": path, "Total": len(values), "Sum": sum(values),
            "Average": float(statistics.mean(values)), "Minimum": min(values),
            "Maximum": max(values), "Range": max(values) - min(values)}


def walk(node, path, out):
    if isinstance(node, dict):
        nums = [v for v in node.values() if is_num(v)]
        if len(nums) >= 2:
            out.append(record(path or "root", nums))
        for k, v in node.items():
            walk(v, f"{path}.{k}" if path else str(k), out)
    elif isinstance(node, list):
        if node and all(is_num(v) for v in node):
            out.append(record(path or "root", node))
        else:
            for i, v in enumerate(node):
                walk(v, f"{path}.{i}" if path else str(i), out)


def main():
    result = []
    for line in open(sys.argv[1]):
        if line.strip():
            recs = []
            walk(json.loads(line), "", recs)
            result.append(recs)
    json.dump(result, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
