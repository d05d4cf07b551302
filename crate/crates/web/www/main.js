import init, { catalog, render_diagram, probe_heatmap, intervention_demo } from "./pkg/diagram_probe_web.js";

const $ = (id) => document.getElementById(id);
let aspects = [];

function status(text, isError = false) {
  $("status").textContent = text;
  $("status").className = isError ? "error" : "";
}

function fillLabels() {
  const a = aspects.find((x) => x.name === $("aspect").value);
  $("label").replaceChildren(...a.labels.map((l) => new Option(l, l)));
}

function params() {
  return {
    aspect: $("aspect").value,
    seed: Number($("seed").value) >>> 0,
    inject: Number($("inject").value),
    epochs: Math.max(1, Number($("epochs").value) | 0),
  };
}

function render() {
  const { aspect, seed } = params();
  try {
    const out = JSON.parse(render_diagram(aspect, $("label").value, seed, Number($("layout").value)));
    $("diagram").innerHTML = out.svg.replace(/^<\?xml[^>]*>\s*/, "");
    $("question").textContent = `${out.question}  (gold: ${out.label})`;
  } catch (e) {
    $("diagram").textContent = String(e);
  }
}

// accuracy in [0, 1] to a white-to-blue ramp; cells above tau get a red outline
function drawGrid(values, rows, cols, tau, mark) {
  const cell = 12;
  const canvas = document.createElement("canvas");
  canvas.width = cols * cell;
  canvas.height = rows * cell;
  const ctx = canvas.getContext("2d");
  values.forEach((v, t) => {
    const x = (t % cols) * cell;
    const y = Math.floor(t / cols) * cell;
    const c = Math.round(255 * (1 - v));
    ctx.fillStyle = `rgb(${c},${c},255)`;
    ctx.fillRect(x, y, cell, cell);
    if (v > tau) {
      ctx.strokeStyle = "#d00";
      ctx.strokeRect(x + 0.5, y + 0.5, cell - 1, cell - 1);
    }
    if (mark && mark.has(t)) {
      ctx.fillStyle = "#000";
      ctx.fillRect(x + cell / 2 - 1, y + cell / 2 - 1, 3, 3);
    }
  });
  return canvas;
}

function figure(canvas, caption) {
  const f = document.createElement("figure");
  const c = document.createElement("figcaption");
  c.textContent = caption;
  f.append(canvas, c);
  return f;
}

// let the status line paint before the blocking wasm call
const later = (fn) => new Promise((r) => setTimeout(() => r(fn()), 20));

async function probe() {
  const p = params();
  status("training probes...");
  try {
    const out = JSON.parse(await later(() => probe_heatmap(p.aspect, p.seed, p.inject, p.epochs)));
    $("maps").replaceChildren(
      ...out.layers.map((l) =>
        figure(drawGrid(l.values, out.rows, out.cols, out.tau), `layer ${l.layer}: max ${l.max.toFixed(3)}`),
      ),
    );
    status(`threshold ${out.tau.toFixed(3)}; outlined patches exceed it`);
  } catch (e) {
    status(String(e), true);
  }
}

async function intervene() {
  const p = params();
  status("training probes and patching...");
  try {
    const out = JSON.parse(await later(() => intervention_demo(p.aspect, p.seed, p.inject, p.epochs)));
    const r = out.row;
    const pct = (v) => (v == null ? "-" : (100 * v).toFixed(1));
    const side = Math.round(Math.sqrt(out.positions));
    $("maps").replaceChildren(
      ...out.layers.flatMap((l) => {
        const mask = (set) => Array.from({ length: out.positions }, (_, t) => (set.has(t) ? 1 : 0));
        const targets = new Set(l.targets);
        const controls = new Set(l.controls);
        return [
          figure(drawGrid(mask(targets), side, side, 2), `layer ${l.layer}: S (${l.targets.length})`),
          figure(drawGrid(mask(controls), side, side, 2, targets), `layer ${l.layer}: R`),
        ];
      }),
    );
    $("intervention").innerHTML = `<table>
      <tr><th>aspect</th><th>clean</th><th>patched</th><th>controlled</th><th>chance</th><th>patched ratio</th></tr>
      <tr><td>${r.aspect}</td><td>${pct(r.clean)}</td><td>${pct(r.patched)}</td><td>${pct(r.controlled)}</td>
      <td>${pct(r.chance)}</td><td>${pct(r.patched_ratio)}</td></tr></table>
      ${r.excluded ? `<p>${r.excluded}</p>` : ""}`;
    status("dots in R mark positions that are also in S");
  } catch (e) {
    status(String(e), true);
  }
}

await init();
aspects = JSON.parse(catalog());
$("aspect").replaceChildren(...aspects.map((a) => new Option(a.title, a.name)));
fillLabels();
$("aspect").addEventListener("change", () => {
  fillLabels();
  render();
});
$("render").addEventListener("click", render);
$("probe").addEventListener("click", probe);
$("intervene").addEventListener("click", intervene);
render();
