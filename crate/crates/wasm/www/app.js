import init, { fixture, analyze, simulate, yieldDemo } from "./pkg/hcoint_wasm.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

function optionalNumber(id) {
  const v = $(id).value.trim();
  return v === "" ? undefined : Number(v);
}

function guarded(errorId, fn) {
  return () => {
    $(errorId).textContent = "";
    try {
      fn();
    } catch (e) {
      $(errorId).textContent = String(e.message ?? e);
    }
  };
}

// Line plot of several series sharing the x axis.
function plot(canvas, legend, xs, series, names) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 40;
  ctx.clearRect(0, 0, w, h);
  const finite = series.flat().filter(Number.isFinite);
  let lo = Math.min(...finite), hi = Math.max(...finite);
  if (lo === hi) { lo -= 1; hi += 1; }
  const x0 = xs[0], x1 = xs[xs.length - 1];
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - lo) / (hi - lo)) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(hi.toPrecision(3), 2, pad + 4);
  ctx.fillText(lo.toPrecision(3), 2, h - pad);
  ctx.fillText(String(x0), pad, h - pad + 14);
  ctx.fillText(String(x1), w - pad - 24, h - pad + 14);

  series.forEach((ys, i) => {
    ctx.strokeStyle = COLORS[i % COLORS.length];
    ctx.beginPath();
    ys.forEach((y, j) => (j ? ctx.lineTo(sx(xs[j]), sy(y)) : ctx.moveTo(sx(xs[j]), sy(y))));
    ctx.stroke();
  });
  legend.innerHTML = names
    .map((n, i) => `<span style="color:${COLORS[i % COLORS.length]}">&#9644; ${n}</span>`)
    .join("");
}

function loadFixture(name) {
  $("spec").value = fixture(name);
}

function runAnalyze() {
  const out = JSON.parse(analyze($("spec").value, optionalNumber("rel-tol"), optionalNumber("radius")));
  $("report").textContent = out.text;
}

function runSimulate() {
  const t = Number($("sim-t").value);
  const seed = BigInt($("sim-seed").value || 0);
  const cols = JSON.parse(simulate($("spec").value, t, seed, $("sim-rel").checked));
  plot($("sim-plot"), $("sim-legend"), cols.t, cols.values, cols.names);
}

function runYield() {
  const demo = JSON.parse(yieldDemo(Number($("grid").value), Number($("yc-t").value), BigInt($("yc-seed").value || 0)));
  const rows = demo.characteristics.map(
    (c) =>
      `<tr><td style="text-align:left">${c.name}</td><td>I(${c.order})</td><td>I(${c.empirical.order})</td>` +
      `<td>${c.empirical.slope.toFixed(2)}</td><td>${c.projections.map((x) => x.toFixed(3)).join(", ")}</td></tr>`
  );
  $("yield-table").innerHTML =
    "<tr><th>characteristic</th><th>structural</th><th>empirical</th><th>slope</th><th>‖P<sub>τ_h</sub> v‖/‖v‖</th></tr>" +
    rows.join("");
  const windows = demo.characteristics.map((c) => c.empirical.windows);
  const xs = windows[0].map(([n]) => Math.log2(n));
  const ys = windows.map((w) => w.map(([, v]) => Math.log2(v)));
  plot($("yc-plot"), $("yc-legend"), xs, ys, demo.characteristics.map((c) => `${c.name} (log2 variance vs log2 block)`));
}

await init();
document.querySelectorAll("[data-fixture]").forEach((b) => b.addEventListener("click", () => loadFixture(b.dataset.fixture)));
$("analyze").addEventListener("click", guarded("analyze-error", runAnalyze));
$("simulate").addEventListener("click", guarded("simulate-error", runSimulate));
$("yield").addEventListener("click", guarded("yield-error", runYield));
loadFixture("i2_band");
runAnalyze();
