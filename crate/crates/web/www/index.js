import init, { trackGlide, warpPhrase, singNote } from "./pkg/cantus_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function report(id, fn) {
  const out = $(id);
  try {
    out.classList.remove("error");
    out.textContent = fn();
  } catch (e) {
    out.classList.add("error");
    out.textContent = String(e.message ?? e);
  }
}

function clear(canvas) {
  const ctx = canvas.getContext("2d");
  ctx.fillStyle = "#fafafa";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  return ctx;
}

function drawLines(canvas, series, top) {
  const ctx = clear(canvas);
  const n = Math.max(...series.map((s) => s.values.length));
  const x = (i) => (i / Math.max(n - 1, 1)) * canvas.width;
  const y = (v) => canvas.height - (v / top) * canvas.height;
  for (const { values, color } of series) {
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    let pen = false;
    values.forEach((v, i) => {
      if (v <= 0) { pen = false; return; }
      if (pen) ctx.lineTo(x(i), y(v)); else ctx.moveTo(x(i), y(v));
      pen = true;
    });
    ctx.stroke();
  }
}

function drawMatrix(canvas, data, rows, cols, flip) {
  const ctx = clear(canvas);
  let lo = Infinity, hi = -Infinity;
  for (const v of data) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  const span = hi - lo || 1;
  const w = canvas.width / cols, h = canvas.height / rows;
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      const t = (data[r * cols + c] - lo) / span;
      const shade = Math.round(255 * (1 - t));
      ctx.fillStyle = `rgb(${shade},${shade},${Math.round(255 - 120 * t)})`;
      const row = flip ? rows - 1 - r : r;
      ctx.fillRect(c * w, row * h, Math.ceil(w), Math.ceil(h));
    }
  }
}

function runGlide() {
  report("g-out", () => {
    const g = trackGlide(num("g-start"), num("g-end"), num("g-secs"), num("g-thr"));
    const truth = g.truth(), est = g.estimate();
    const top = Math.max(...truth, ...est) * 1.15;
    drawLines($("g-canvas"), [
      { values: truth, color: "#999" },
      { values: est, color: "#1f77b4" },
    ], top);
    let sum = 0, count = 0;
    est.forEach((f, i) => {
      if (f > 0) { sum += Math.abs(1200 * Math.log2(f / truth[i])); count++; }
    });
    const mean = count ? (sum / count).toFixed(2) : "n/a";
    return `${est.length} frames, ${count} voiced, mean |error| ${mean} cents (grey: truth, blue: estimate)`;
  });
}

function runWarp() {
  report("w-out", () => {
    const v = warpPhrase($("w-text").value, $("w-curve").value);
    const tokens = v.tokens().split(" ");
    drawMatrix($("w-before"), v.before(), tokens.length, v.frames_before, false);
    drawMatrix($("w-after"), v.after(), tokens.length, v.frames_after, false);
    return `${tokens.join(" ")} | ${v.frames_before} frames before, ${v.frames_after} after`;
  });
}

let lastNote = null;

function runSing() {
  report("s-out", () => {
    const n = singNote($("s-lyric").value, num("s-midi"), num("s-secs"), 0n);
    lastNote = n;
    $("s-play").disabled = false;
    drawMatrix($("s-canvas"), n.mel(), n.bands, n.frames, true);
    return `${n.phonemes()} | ${n.frames} frames, ${n.bands} mel bands`;
  });
}

function play() {
  if (!lastNote) return;
  const samples = lastNote.samples();
  const ctx = new AudioContext({ sampleRate: lastNote.sample_rate });
  const buf = ctx.createBuffer(1, samples.length, lastNote.sample_rate);
  buf.copyToChannel(samples, 0);
  const src = ctx.createBufferSource();
  src.buffer = buf;
  src.connect(ctx.destination);
  src.start();
}

await init();
$("g-run").onclick = runGlide;
$("w-run").onclick = runWarp;
$("s-run").onclick = runSing;
$("s-play").onclick = play;
runGlide();
runWarp();
runSing();
