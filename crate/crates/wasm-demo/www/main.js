import init, { coverageMap, linkBudget, Simulation } from "./pkg/netcurriculum_demo.js";

const $ = (id) => document.getElementById(id);
const configText = () => $("config").value;

function report(el, fn) {
  try {
    $(el).textContent = "";
    return fn();
  } catch (e) {
    $(el).textContent = String(e.message ?? e);
  }
}

// dB value to a blue-yellow ramp.
function ramp(t) {
  const u = Math.min(1, Math.max(0, t));
  return [Math.round(40 + 215 * u), Math.round(60 + 170 * u), Math.round(150 - 110 * u)];
}

function drawMap() {
  report("config-err", () => {
    const n = Number($("grid").value);
    const db = coverageMap(configText(), n, n);
    let lo = Infinity, hi = -Infinity;
    for (const v of db) { if (v > -1e9) { lo = Math.min(lo, v); hi = Math.max(hi, v); } }
    const ctx = $("map").getContext("2d");
    const img = ctx.createImageData(n, n);
    db.forEach((v, k) => {
      const [r, g, b] = ramp((v - lo) / (hi - lo || 1));
      img.data.set([r, g, b, 255], 4 * k);
    });
    const tmp = new OffscreenCanvas(n, n);
    tmp.getContext("2d").putImageData(img, 0, 0);
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(tmp, 0, 0, 400, 400);
    $("map-range").textContent = `best SINR ${lo.toFixed(1)} to ${hi.toFixed(1)} dB`;
  });
}

function drawCurve() {
  report("config-err", () => {
    const samples = 300;
    const rows = linkBudget(configText(), Number($("maxd").value), samples);
    const ctx = $("curve").getContext("2d");
    const { width: w, height: h } = ctx.canvas;
    ctx.clearRect(0, 0, w, h);
    const pad = 30;
    const maxd = rows[(samples - 1) * 5];
    const sinr = [], q = [];
    for (let k = 0; k < samples; k++) {
      sinr.push(rows[5 * k + 2]);
      q.push(rows[5 * k + 4]);
    }
    const smin = Math.min(...sinr), smax = Math.max(...sinr);
    const x = (k) => pad + (w - 2 * pad) * rows[5 * k] / maxd;
    const line = (vals, norm, color) => {
      ctx.strokeStyle = color;
      ctx.beginPath();
      vals.forEach((v, k) => {
        const y = h - pad - (h - 2 * pad) * norm(v);
        k ? ctx.lineTo(x(k), y) : ctx.moveTo(x(k), y);
      });
      ctx.stroke();
    };
    ctx.strokeStyle = "#999";
    ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
    line(sinr, (v) => (v - smin) / (smax - smin || 1), "#1f77b4");
    line(q, (v) => v, "#d62728");
    ctx.fillStyle = "#333";
    ctx.fillText(`SINR ${smax.toFixed(0)}..${smin.toFixed(0)} dB (blue), QoE 0..1 (red)`, pad, pad - 10);
    ctx.fillText(`0`, pad, h - pad + 14);
    ctx.fillText(`${maxd.toFixed(0)} m`, w - pad - 30, h - pad + 14);
  });
}

let sim = null;
let timer = null;

function drawNet(s) {
  const ctx = $("net").getContext("2d");
  const cfg = JSON.parse(configText() || "{}");
  const aw = cfg.area_width ?? 1000, ah = cfg.area_height ?? 1000;
  const px = (p) => [400 * p[0] / aw, 400 * p[1] / ah];
  ctx.clearRect(0, 0, 400, 400);
  for (const l of s.links) {
    const [ux, uy] = px(s.ues[l.ue]), [bx, by] = px(s.bs[l.bs]);
    ctx.strokeStyle = `rgba(30,120,60,${0.25 + 0.75 * l.qoe})`;
    ctx.beginPath(); ctx.moveTo(ux, uy); ctx.lineTo(bx, by); ctx.stroke();
  }
  ctx.fillStyle = "#333";
  for (const b of s.bs) { const [x, y] = px(b); ctx.fillRect(x - 5, y - 5, 10, 10); }
  s.ues.forEach((u, i) => {
    const [x, y] = px(u);
    ctx.fillStyle = s.links.some((l) => l.ue === i) ? "#1f77b4" : "#d62728";
    ctx.beginPath(); ctx.arc(x, y, 4, 0, 2 * Math.PI); ctx.fill();
  });
  $("stats").textContent =
    `t          ${s.t}\nlinks      ${s.links.length}\nreward     ${s.reward.toFixed(4)}\n` +
    `mean QoE   ${s.mean_qoe.toFixed(4)}\ndropouts   ${s.dropouts}\nepisode end ${s.done}`;
}

function newSim() {
  report("sim-err", () => {
    sim = new Simulation(configText(), BigInt($("seed").value || 0));
    sim.setReward($("expr").value);
    drawNet(JSON.parse(sim.snapshot()));
  });
}

function step() {
  if (!sim) newSim();
  return report("sim-err", () => {
    sim.setReward($("expr").value);
    drawNet(JSON.parse(sim.step($("policy").value)));
    return true;
  });
}

$("draw-map").onclick = drawMap;
$("draw-curve").onclick = drawCurve;
$("reset").onclick = newSim;
$("step").onclick = step;
$("run").onclick = () => {
  if (timer) { clearInterval(timer); timer = null; $("run").textContent = "Run"; return; }
  $("run").textContent = "Stop";
  timer = setInterval(() => { if (!step()) $("run").click(); }, 100);
};
$("model").onchange = async (e) => {
  const file = e.target.files[0];
  if (!file) return;
  if (!sim) newSim();
  const text = await file.text();
  report("sim-err", () => { sim.loadModel(text); $("policy").value = "model"; });
};

await init();
drawMap();
drawCurve();
newSim();
