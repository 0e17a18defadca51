import init, { createAnchor, resolveAnchor, similarityProfile, parseRedif, randomWorld } from "./pkg/prepub_demo.js";

const $ = (id) => document.getElementById(id);
const HANDLE = "RePEc:demo:wpaper:1";
let anchor = null;

function charOffset(text, utf16) {
  return Array.from(text.slice(0, utf16)).length;
}

function escapeHtml(s) {
  return s.replace(/[&<>"]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;" })[c]);
}

function drawProfile(values) {
  const c = $("profile");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  if (!values.length) return;
  const w = c.width / values.length;
  values.forEach((v, i) => {
    g.fillStyle = v >= 0.8 ? "#d08c00" : "#8aa";
    g.fillRect(i * w, c.height * (1 - v), Math.max(w, 1), c.height * v);
  });
}

function doAnchor() {
  const box = $("orig");
  if (box.selectionStart === box.selectionEnd) {
    $("anchorOut").textContent = "Select some text first.";
    return;
  }
  const start = charOffset(box.value, box.selectionStart);
  const end = charOffset(box.value, box.selectionEnd);
  try {
    anchor = createAnchor(box.value, start, end, HANDLE);
    $("anchorOut").textContent = JSON.stringify(JSON.parse(anchor), null, 2);
    $("edited").value = box.value;
  } catch (e) {
    $("anchorOut").textContent = String(e);
  }
}

function doResolve() {
  const out = $("resolveOut");
  if (!anchor) {
    out.textContent = "Anchor something first.";
    return;
  }
  const doc = $("edited").value;
  const r = JSON.parse(resolveAnchor(doc, anchor));
  drawProfile(Array.from(similarityProfile(doc, JSON.parse(anchor).exact)));
  if (r.status !== "found") {
    out.innerHTML = `<p class="err">${r.status}</p>`;
    return;
  }
  const chars = Array.from(doc);
  const before = chars.slice(0, r.start).join("");
  const hit = chars.slice(r.start, r.end).join("");
  const after = chars.slice(r.end).join("");
  out.innerHTML = `<p>found by <b>${r.stage}</b> stage at [${r.start}, ${r.end})</p>` +
    `<p>${escapeHtml(before)}<mark>${escapeHtml(hit)}</mark>${escapeHtml(after)}</p>`;
}

function doParse() {
  $("parseOut").textContent = JSON.stringify(JSON.parse(parseRedif($("redif").value)), null, 2);
}

function doWorld() {
  const w = JSON.parse(randomWorld(BigInt($("seed").value || 0), Number($("persons").value), Number($("outputs").value)));
  const rows = w.persons.map((p) => {
    const down = p.downstream.map((d) => `${d.person_id}×${d.usage_count}`).join(", ") || "-";
    return `<tr><td>${p.person_id}</td><td>${escapeHtml(p.name)}</td><td>${p.claimed}</td><td>${down}</td></tr>`;
  });
  $("worldOut").innerHTML =
    `<p>${w.items} items, ${w.outputs} outputs, ${w.notifications} notifications</p>` +
    `<table><tr><th>person</th><th>name</th><th>claims</th><th>built on by</th></tr>${rows.join("")}</table>`;
}

await init();
$("anchor").onclick = doAnchor;
$("resolve").onclick = doResolve;
$("parse").onclick = doParse;
$("world").onclick = doWorld;
