// node dump.js <dir with tree-sitter.js and tree-sitter-python.wasm> < sources.json
// prints a JSON array of s-expressions (anonymous nodes quoted, byte ranges)
const path = require('path');
const fs = require('fs');
const dir = path.resolve(process.argv[2] || '.');
const Parser = require(path.join(dir, 'tree-sitter.js'));

function sexp(n) {
  let s = '(' + (n.isMissing ? 'MISSING ' : '') + (n.isNamed ? n.type : JSON.stringify(n.type));
  s += ' ' + n.startIndex + '-' + n.endIndex;
  for (let i = 0; i < n.childCount; i++) s += ' ' + sexp(n.child(i));
  return s + ')';
}

(async () => {
  await Parser.init({locateFile: (f) => path.join(dir, f)});
  const py = await Parser.Language.load(path.join(dir, 'tree-sitter-python.wasm'));
  const p = new Parser();
  p.setLanguage(py);
  const srcs = JSON.parse(fs.readFileSync(0, 'utf8'));
  // byte offsets equal UTF-16 offsets only for ASCII input; callers keep to ASCII
  console.log(JSON.stringify(srcs.map((s) => {
    const t = p.parse(s);
    const out = sexp(t.rootNode);
    t.delete();
    return out;
  })));
})();
