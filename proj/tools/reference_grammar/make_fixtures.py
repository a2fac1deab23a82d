"""Builds the test corpus and the parser reference fixture.

    python3 make_fixtures.py --stdlib /usr/lib/python3.10 --ts-dir <dir> --out ../../tests

<dir> must hold tree-sitter.js and tree-sitter.wasm from the web-tree-sitter
0.22.6 npm package plus tree-sitter-python.wasm (the one shipped with marimo
works).
"""
import argparse
import ast
import json
import random
import subprocess
from pathlib import Path

HERE = Path(__file__).resolve().parent

EDGE_CASES = [
"match x:\n    case [1, *rest]:\n        pass\n    case {'a': b, **kw}:\n        pass\n    case Point(x=0, y=_) | None:\n        pass\n    case -1 | 2+3j as z if z:\n        pass\n",
"match = 1\nmatch(x)\nmatch[1]\n",
"f'{a!r:>{width}} {b=} {{x}} {c:%Y-%m}'\n",
"f'''multi {x\n + y}'''\n",
"print >>sys.stderr, 'x'\nprint 'a', 'b',\nexec 'code' in ns\n",
"async def f():\n    async with a as b, c:\n        await x\n    async for i in y:\n        pass\n",
"@dec(1)\n@a.b\nclass C(B, metaclass=M):\n    x: int = 1\n",
"if (n := 10) > 5: pass\n",
"lambda x=1, *a, k, **kw: x\n",
"x = [i for i in range(3) if i for j in k]\n",
"def f(a, /, b, *, c): ...\n",
"try:\n    pass\nexcept* (A, B) as e:\n    pass\n",
"type X[T] = list[T]\n",
"x = a if b else c if d else e\n",
"del a[1], b.c\nglobal x, y\nnonlocal z\n",
"from . import a\nfrom ..b import (c as d, e,)\nfrom __future__ import annotations\nimport a.b as c\n",
"x = not a in b and c is not d\n",
"with (open(a) as f, open(b) as g):\n    pass\n",
"x = {**a, 'b': 1}\ny = {*a, b}\n",
"raise X from Y\n",
"assert x, 'msg'\n",
"a[1:2, ::3, ...]\n",
"x = 0x_1F + 1_000.5e-3j + 0o17 + 0b1 + 10L\n",
"s = b'\\x00' rb'\\d' u'\\N{DASH}' '\\u1234'\n",
"for x, in y: pass\nwhile 1:\n    break\nelse:\n    pass\n",
"x = (yield)\ny = yield from z\n",
"def f():\n    return\n\n\nx = 1\n",
"class A:\n    def f(self):\n        pass\n    # trailing\n\n# end\n",
"x = 1 # c\n# d\ny = 2\n",
"if a:\n  pass\nelif b:\n    pass\nelse:\n        pass\n",
"x = (\n  1, # one\n  2\n)\n",
"def f(x: int = 3, *args: str, **kw: 'T') -> None: pass\n",
"print(1, sep='')\n",
"x = `a`\n",
"x = a @ b // c ** -d ** e\n",
"x = [*a, *b]\nf(*a, **b)\n",
"a, *b = c\n[a, b] = c\n(a, b) = c\n",
"x: int\n",
"x += 1; y -= 2;\n",
"if x:\n\n    pass\n",
"def f():\n\tif x:\n\t\treturn 1\n",
"x = 1 if y else(2)\n",
"f(x for x in y)\n",
"x = {a: b for a, b in c}\n",
"match x:\n    case {'k': [1, 2]}: pass\n    case str() | bytes(): pass\n    case (a, b, *_): pass\n    case A.B.C: pass\n    case 'a' 'b': pass\n",
]

OPS = "()[]{}:,='\"\\\n #"


def stdlib_snippets(root):
    out = []
    for f in sorted(Path(root).rglob("*.py")):
        if "site-packages" in f.parts or "dist-packages" in f.parts:
            continue
        try:
            text = f.read_text(encoding="utf-8")
            tree = ast.parse(text)
        except Exception:
            continue
        if not text.isascii():
            continue
        lines = text.splitlines(keepends=True)
        for node in tree.body:
            if not isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
                continue
            start = node.lineno - 1
            if node.decorator_list:
                start = node.decorator_list[0].lineno - 1
            body = "".join(lines[start:node.end_lineno])
            origin = f"{f.relative_to(root)}:{start + 1}"
            out.append((origin, body))
    return out


def mutate(rng, s):
    for _ in range(rng.randint(1, 3)):
        if not s:
            break
        i = rng.randrange(len(s))
        op = rng.random()
        if op < 0.4:
            s = s[:i] + s[i + 1:]
        elif op < 0.8:
            s = s[:i] + rng.choice(OPS) + s[i:]
        else:
            s = s[:i]
    return s


def reference(ts_dir, sources):
    res = subprocess.run(["node", str(HERE / "dump.js"), ts_dir], input=json.dumps(sources),
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--stdlib", default="/usr/lib/python3.10")
    ap.add_argument("--ts-dir", required=True)
    ap.add_argument("--out", default=str(HERE.parent.parent / "tests"))
    ap.add_argument("--corpus-size", type=int, default=300)
    args = ap.parse_args()

    rng = random.Random(20240117)
    snippets = stdlib_snippets(args.stdlib)
    rng.shuffle(snippets)
    out = Path(args.out)

    corpus = [(o, s) for o, s in snippets if 120 <= len(s) <= 1500][: args.corpus_size]
    with open(out / "data" / "snippets.jsonl", "w") as fh:
        for i, (origin, body) in enumerate(corpus):
            fh.write(json.dumps({"id": f"py{i:04d}", "source": body, "origin": "cpython/Lib/" + origin}) + "\n")

    rest = [s for o, s in snippets if len(s) <= 1200][args.corpus_size: args.corpus_size + 250]
    broken = [mutate(rng, s) for s in rest[:120]]
    sources = EDGE_CASES + rest + broken
    trees = reference(args.ts_dir, sources)
    with open(out / "fixtures" / "parser_reference.jsonl", "w") as fh:
        for src, tree in zip(sources, trees):
            fh.write(json.dumps({"source": src, "sexp": tree}) + "\n")


if __name__ == "__main__":
    main()
