import init, { beta_table, evaluate_normal, cumulative_curve } from "./pkg/bes_wasm.js";

const $ = (id) => document.getElementById(id);

function fmt(v, digits = 4) {
  if (typeof v === "string") return v;
  return Number.isFinite(v) ? v.toFixed(digits) : String(v);
}

function parseNumbers(text) {
  return text.split(/[\s,]+/).filter((s) => s.length).map(Number);
}

function showError(el, e) {
  el.innerHTML = "";
  const span = document.createElement("span");
  span.className = "error";
  span.textContent = String(e.message ?? e);
  el.appendChild(span);
}

function runBetaTable() {
  const out = $("bt-out");
  try {
    const t = JSON.parse(beta_table($("bt-family").value, Number($("bt-r2").value)));
    const head = t.names.map((n) => `<th>${n}</th>`).join("");
    const row = (label, xs) => `<tr><th>${label}</th>${xs.map((x) => `<td>${fmt(x)}</td>`).join("")}</tr>`;
    out.innerHTML =
      `<table><tr><th></th>${head}</tr>${row("weight", t.weights)}${row("β", t.beta)}</table>` +
      `<p>Variance of the linear predictor: ${fmt(t.linear_predictor_variance)}</p>`;
  } catch (e) {
    showError(out, e);
  }
}

function runEvaluate() {
  const out = $("ev-out");
  try {
    const mean = new Float64Array(parseNumbers($("ev-mean").value));
    const cov = new Float64Array(parseNumbers($("ev-cov").value));
    const r = JSON.parse(
      evaluate_normal(
        $("ev-h").value,
        $("ev-names").value,
        mean,
        cov,
        Number($("ev-b").value),
        Number($("ev-draws").value),
        1n,
      ),
    );
    const lines = [
      `fit         ${fmt(r.fit)}`,
      `complexity  ${fmt(r.complexity)}`,
      `log BF_iu   ${fmt(r.log_bf_iu)}   (MC se ${fmt(r.mc_se_log_bf_iu)})`,
      `log BF_ic   ${r.log_bf_ic === null ? "undefined for equality hypotheses" : fmt(r.log_bf_ic)}`,
      `prior centre [${r.prior_center.map((x) => fmt(x)).join(", ")}]`,
      `draws       ${r.mc_draws === 0 ? "exact" : r.mc_draws}`,
    ];
    for (const w of r.warnings) lines.push(`note: ${w}`);
    out.textContent = lines.join("\n");
  } catch (e) {
    out.textContent = "";
    showError(out, e);
  }
}

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

function toNumber(v) {
  if (v === "inf") return Infinity;
  if (v === "-inf") return -Infinity;
  if (v === "nan") return NaN;
  return v;
}

function plotCurves(canvas, set) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = { l: 56, r: 16, t: 16, b: 36 };
  ctx.clearRect(0, 0, w, h);

  const series = set.curves.map((c) => c.cumulative_log_bf.map(toNumber));
  const finite = series.flat().filter(Number.isFinite);
  let lo = Math.min(0, ...finite);
  let hi = Math.max(0, ...finite);
  if (hi - lo < 1e-9) hi = lo + 1;
  const T = series[0].length;
  const x = (i) => pad.l + ((w - pad.l - pad.r) * i) / Math.max(1, T - 1);
  const y = (v) => pad.t + ((h - pad.t - pad.b) * (hi - v)) / (hi - lo);

  ctx.strokeStyle = "#999";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(pad.l, y(0));
  ctx.lineTo(w - pad.r, y(0));
  ctx.stroke();

  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
  ctx.textAlign = "right";
  for (let k = 0; k <= 4; k++) {
    const v = lo + ((hi - lo) * k) / 4;
    ctx.fillText(v.toFixed(1), pad.l - 6, y(v) + 4);
  }
  ctx.textAlign = "center";
  for (const i of [0, Math.floor((T - 1) / 2), T - 1]) ctx.fillText(String(i + 1), x(i), h - pad.b + 16);
  ctx.fillText("studies", (pad.l + w - pad.r) / 2, h - 6);

  series.forEach((s, k) => {
    ctx.strokeStyle = COLORS[k % COLORS.length];
    ctx.lineWidth = 2;
    ctx.beginPath();
    let pen = false;
    s.forEach((v, i) => {
      const yy = y(Math.max(lo, Math.min(hi, v)));
      if (Number.isNaN(v)) {
        pen = false;
        return;
      }
      if (pen) ctx.lineTo(x(i), yy);
      else ctx.moveTo(x(i), yy);
      pen = true;
    });
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.textAlign = "left";
    ctx.fillText(set.curves[k].label, pad.l + 8 + 60 * k, pad.t + 12);
  });
}

function runCurve() {
  const msg = $("cc-msg");
  msg.textContent = "running...";
  // Let the message paint before the synchronous computation starts.
  setTimeout(() => {
    try {
      const t0 = performance.now();
      const set = JSON.parse(
        cumulative_curve(
          Number($("cc-sim").value),
          Number($("cc-n").value),
          Number($("cc-studies").value),
          $("cc-alt").value,
          $("cc-dec").checked && $("cc-sim").value === "11",
          20000,
          BigInt($("cc-seed").value || 0),
        ),
      );
      plotCurves($("cc-plot"), set);
      const finals = set.curves
        .map((c) => `${c.label}: log BF ${fmt(toNumber(c.cumulative_log_bf.at(-1)), 2)}, PMP ${fmt(c.pmp.at(-1), 3)}`)
        .join("; ");
      msg.textContent = `${finals} (${((performance.now() - t0) / 1000).toFixed(2)} s)`;
    } catch (e) {
      showError(msg, e);
    }
  }, 10);
}

await init();
$("bt-run").addEventListener("click", runBetaTable);
$("ev-run").addEventListener("click", runEvaluate);
$("cc-run").addEventListener("click", runCurve);
runBetaTable();
runEvaluate();
