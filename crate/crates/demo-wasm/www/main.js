import init, { compare, nearest, downsample } from "./pkg/seglab_demo_wasm.js";

const $ = (id) => document.getElementById(id);

function runCompare() {
  try {
    const r = compare($("seg-a").value, $("seg-b").value, Number($("duration").value), $("outcome").checked);
    $("compare-out").textContent =
      `A      ${(r.agreement * 100).toFixed(3)} %\n` +
      `D_fwd  ${r.d_forward.toFixed(4)} s\nD_bwd  ${r.d_backward.toFixed(4)} s\nD_sym  ${r.d_sym.toFixed(4)} s`;
    r.free();
  } catch (e) {
    $("compare-out").textContent = `error: ${e.message}`;
  }
}

function runNearest() {
  const ts = new Float64Array($("stamps").value.trim().split(/[\s,]+/).map(Number));
  const t = Number($("playhead").value);
  try {
    const k = nearest(ts, t);
    $("nearest-out").textContent = `t = ${t.toFixed(3)} s  ->  frame ${k} (${ts[k]} s)`;
  } catch (e) {
    $("nearest-out").textContent = `error: ${e.message}`;
  }
}

function runPlot() {
  const n = Math.max(2, Number($("samples").value));
  const t = new Float64Array(n);
  const v = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    t[i] = i / 1000;
    v[i] = Math.sin(t[i] * 3) + 0.2 * Math.sin(t[i] * 97) + (Math.random() < 0.0002 ? 3 : 0);
  }
  const start = performance.now();
  let env;
  try {
    env = downsample(t, v, 0, t[n - 1], Number($("points").value));
  } catch (e) {
    $("plot-out").textContent = `error: ${e.message}`;
    return;
  }
  const ms = performance.now() - start;
  const c = $("plot-canvas");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  let lo = Infinity, hi = -Infinity;
  for (let i = 1; i < env.length; i += 2) { lo = Math.min(lo, env[i]); hi = Math.max(hi, env[i]); }
  const x = (s) => (s / t[n - 1]) * (c.width - 1);
  const y = (val) => c.height - 4 - ((val - lo) / (hi - lo || 1)) * (c.height - 8);
  g.beginPath();
  for (let i = 0; i < env.length; i += 2) {
    i === 0 ? g.moveTo(x(env[i]), y(env[i + 1])) : g.lineTo(x(env[i]), y(env[i + 1]));
  }
  g.stroke();
  $("plot-out").textContent = `${n} samples -> ${env.length / 2} points in ${ms.toFixed(1)} ms, peak ${hi.toFixed(2)}`;
}

await init();
$("compare").onclick = runCompare;
$("playhead").oninput = runNearest;
$("stamps").onchange = runNearest;
$("plot").onclick = runPlot;
runCompare();
runNearest();
runPlot();
