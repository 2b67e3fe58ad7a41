import init, { w_distribution, rate_curves, cesaro_trace } from "./pkg/orbitstat_wasm.js";

const $ = (id) => document.getElementById(id);

function frame(canvas, xmin, xmax, ymin, ymax) {
  const ctx = canvas.getContext("2d");
  const pad = 36;
  const w = canvas.width - 2 * pad;
  const h = canvas.height - 2 * pad;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w, h);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  ctx.fillText(ymax.toPrecision(3), 2, pad + 4);
  ctx.fillText(ymin.toPrecision(3), 2, pad + h);
  ctx.fillText(String(+xmin.toPrecision(3)), pad, pad + h + 14);
  ctx.fillText(String(+xmax.toPrecision(3)), pad + w - 20, pad + h + 14);
  const sx = (x) => pad + ((x - xmin) / (xmax - xmin || 1)) * w;
  const sy = (y) => pad + h - ((y - ymin) / (ymax - ymin || 1)) * h;
  return { ctx, sx, sy };
}

function line(f, xs, ys, color) {
  f.ctx.strokeStyle = color;
  f.ctx.beginPath();
  let started = false;
  xs.forEach((x, i) => {
    const y = ys[i];
    if (!Number.isFinite(y)) { started = false; return; }
    if (started) f.ctx.lineTo(f.sx(x), f.sy(y)); else f.ctx.moveTo(f.sx(x), f.sy(y));
    started = true;
  });
  f.ctx.stroke();
}

function guard(stat, fn) {
  try {
    stat.className = "";
    fn();
  } catch (e) {
    stat.className = "err";
    stat.textContent = String(e);
  }
}

function drawW() {
  guard($("wstat"), () => {
    const d = JSON.parse(w_distribution($("system").value, Number($("wx").value)));
    const top = Math.max(...d.masses);
    const f = frame($("wplot"), d.values[0] - 0.5, d.values[d.values.length - 1] + 0.5, 0, top);
    f.ctx.fillStyle = "#3a6ea5";
    const bw = Math.max(1, f.sx(1) - f.sx(0) - 2);
    d.values.forEach((v, i) => f.ctx.fillRect(f.sx(v) - bw / 2, f.sy(d.masses[i]), bw, f.sy(0) - f.sy(d.masses[i])));
    $("wstat").textContent = `mean ${d.mean.toFixed(4)}, variance ${d.variance.toFixed(4)}`;
  });
}

function drawRates() {
  guard($("rstat"), () => {
    const d = JSON.parse(rate_curves(Number($("rl").value), Number($("rr").value), Number($("rx").value), 300));
    const finite = d.poisson.concat(d.subset).filter(Number.isFinite);
    const f = frame($("rplot"), 0, d.x[d.x.length - 1], 0, Math.max(...finite));
    line(f, d.x, d.poisson, "#3a6ea5");
    line(f, d.x, d.subset, "#c0504d");
    $("rstat").textContent = "blue: Poisson, red: subset";
  });
}

function drawTrace() {
  guard($("cstat"), () => {
    const d = JSON.parse(cesaro_trace($("system").value, Number($("cx").value)));
    const ks = d.normalized.map((_, i) => i + 1);
    const all = d.normalized.concat(d.running_mean);
    const f = frame($("cplot"), 1, ks.length, Math.min(...all), Math.max(...all));
    line(f, ks, d.normalized, "#bbb");
    line(f, ks, d.running_mean, "#3a6ea5");
    const last = d.running_mean[d.running_mean.length - 1];
    $("cstat").textContent = `growth ${d.lambda.toPrecision(8)}, running mean at X: ${last.toPrecision(8)}`;
  });
}

await init();
$("wgo").onclick = drawW;
$("rgo").onclick = drawRates;
$("cgo").onclick = drawTrace;
drawW();
drawRates();
drawTrace();
