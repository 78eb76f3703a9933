import init, { scene, denoise, mosaic, riskCurve } from "./pkg/genre_wasm.js";

const SIDE = 256;
const $ = (id) => document.getElementById(id);

let clean = null;
let width = SIDE;
let height = SIDE;

function draw(canvas, pixels, w, h) {
  canvas.width = w;
  canvas.height = h;
  const rgba = new Uint8ClampedArray(w * h * 4);
  for (let i = 0; i < w * h; i++) {
    rgba[4 * i] = rgba[4 * i + 1] = rgba[4 * i + 2] = pixels[i];
    rgba[4 * i + 3] = 255;
  }
  canvas.getContext("2d").putImageData(new ImageData(rgba, w, h), 0, 0);
}

function params() {
  return {
    dist: $("dist").value,
    sigma: Number($("sigma").value),
    levels: Number($("levels").value),
    realization: $("realization").value,
    seed: Number($("seed").value) >>> 0,
  };
}

function guarded(f) {
  return () => {
    $("error").textContent = "";
    try {
      f();
    } catch (e) {
      $("error").textContent = e.message ?? String(e);
    }
  };
}

function loadScene() {
  width = height = SIDE;
  clean = scene($("scene").value, width, height);
  draw($("clean"), clean, width, height);
}

// Luma of the upload, cropped to a multiple of 2^6 and at most 512 on a side.
function loadFile(file) {
  const img = new Image();
  img.onload = () => {
    const m = 64;
    width = Math.min(512, Math.floor(img.width / m) * m);
    height = Math.min(512, Math.floor(img.height / m) * m);
    if (width === 0 || height === 0) {
      $("error").textContent = "image must be at least 64x64";
      return;
    }
    const c = document.createElement("canvas");
    c.width = width;
    c.height = height;
    const ctx = c.getContext("2d");
    ctx.drawImage(img, 0, 0);
    const rgba = ctx.getImageData(0, 0, width, height).data;
    clean = new Uint8Array(width * height);
    for (let i = 0; i < clean.length; i++) {
      clean[i] = Math.round(0.299 * rgba[4 * i] + 0.587 * rgba[4 * i + 1] + 0.114 * rgba[4 * i + 2]);
    }
    draw($("clean"), clean, width, height);
    URL.revokeObjectURL(img.src);
  };
  img.src = URL.createObjectURL(file);
}

function runDenoise() {
  const p = params();
  const v = denoise(clean, width, height, p.dist, p.sigma, p.seed, p.levels, p.realization);
  draw($("noisy"), v.noisy, width, height);
  draw($("output"), v.output, width, height);
  const alpha = Array.from(v.alpha, (a) => a.toFixed(3)).join(" ");
  $("stats").textContent =
    `PSNR ${v.inputPsnr.toFixed(2)} -> ${v.outputPsnr.toFixed(2)} dB   ` +
    `SSIM ${v.inputSsim.toFixed(4)} -> ${v.outputSsim.toFixed(4)}\n` +
    `estimated MSE ${v.risk.toFixed(2)}   true MSE ${v.mse.toFixed(2)}\n` +
    `gains ${alpha}`;
  v.free();
}

function runMosaic() {
  const levels = params().levels;
  const pixels = mosaic(clean, width, height, levels, Number($("gain").value));
  draw($("mosaic"), pixels, 3 * width, (levels + 1) * height);
}

function runCurve() {
  const p = params();
  const v = riskCurve(clean, width, height, p.dist, p.sigma, p.seed, 6, p.realization);
  const risk = [];
  const mse = [];
  for (let i = 0; i < v.length; i += 2) {
    risk.push(v[i]);
    mse.push(v[i + 1]);
  }
  plot($("curve"), risk, mse);
}

function plot(canvas, risk, mse) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 40;
  ctx.clearRect(0, 0, w, h);
  const all = risk.concat(mse);
  const lo = Math.min(...all) * 0.95;
  const hi = Math.max(...all) * 1.05;
  const x = (i) => pad + (i * (w - 2 * pad)) / Math.max(1, risk.length - 1);
  const y = (v) => h - pad - ((v - lo) * (h - 2 * pad)) / (hi - lo || 1);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.font = "12px system-ui";
  risk.forEach((_, i) => ctx.fillText(String(i + 1), x(i) - 3, h - pad + 16));
  ctx.fillText(hi.toFixed(1), 2, pad + 4);
  ctx.fillText(lo.toFixed(1), 2, h - pad);
  ctx.fillText("levels", w / 2 - 15, h - 6);
  for (const [series, color, label, row] of [
    [risk, "#c33", "estimated", 0],
    [mse, "#36c", "true", 1],
  ]) {
    ctx.strokeStyle = ctx.fillStyle = color;
    ctx.beginPath();
    series.forEach((v, i) => (i ? ctx.lineTo(x(i), y(v)) : ctx.moveTo(x(i), y(v))));
    ctx.stroke();
    series.forEach((v, i) => ctx.fillRect(x(i) - 2, y(v) - 2, 5, 5));
    ctx.fillText(label, w - pad - 60, pad + 16 + 14 * row);
  }
}

await init();
$("sigma").addEventListener("input", () => ($("sigma-value").textContent = $("sigma").value));
$("scene").addEventListener("change", guarded(loadScene));
$("file").addEventListener("change", (e) => e.target.files[0] && loadFile(e.target.files[0]));
$("run-denoise").addEventListener("click", guarded(runDenoise));
$("run-mosaic").addEventListener("click", guarded(runMosaic));
$("gain").addEventListener("input", guarded(runMosaic));
$("run-curve").addEventListener("click", guarded(runCurve));
loadScene();
guarded(runDenoise)();
