import init, { scoreProfile, kappaAll, alpha } from "./pkg/upcase_web_demo.js";

const ITEMS = 16;

function el(tag, attrs = {}, text = "") {
  const e = document.createElement(tag);
  Object.assign(e, attrs);
  if (text) e.textContent = text;
  return e;
}

function table(head, rows) {
  const t = el("table");
  const hr = el("tr");
  head.forEach((h) => hr.append(el("th", {}, h)));
  t.append(hr);
  for (const r of rows) {
    const tr = el("tr");
    r.forEach((c) => tr.append(el("td", {}, String(c))));
    t.append(tr);
  }
  return t;
}

function show(target, build) {
  const out = document.getElementById(target);
  out.replaceChildren();
  try {
    out.append(...build());
  } catch (err) {
    out.append(el("p", { className: "error" }, String(err.message ?? err)));
  }
}

function fmt(x) {
  return x === null || x === undefined ? "undefined" : x.toFixed(4);
}

function buildRatings() {
  const box = document.getElementById("ratings");
  for (let i = 1; i <= ITEMS; i++) {
    const sel = el("select", { id: `r${i}` });
    for (const v of ["N", "P", "F"]) sel.append(el("option", { value: v }, v));
    sel.value = "P";
    const label = el("label", {}, `${i} `);
    label.append(sel);
    box.append(label);
  }
}

await init();
buildRatings();

document.getElementById("score").onclick = () =>
  show("profile", () => {
    const ratings = [];
    for (let i = 1; i <= ITEMS; i++) ratings.push(document.getElementById(`r${i}`).value);
    const p = JSON.parse(scoreProfile(ratings.join(" ")));
    return [
      table(["Process", "Score", "Rating"], p.rows.map((r) => [r.process, r.score, r.rating])),
      el("p", {}, `Capability level ${p.capability_level}`),
    ];
  });

document.getElementById("kappa").onclick = () =>
  show("kappa-out", () => {
    const k = JSON.parse(kappaAll(document.getElementById("pairs").value));
    return [
      el("p", {}, `n = ${k.n}, agreements = ${k.agreements}`),
      table(
        ["Weighting", "Kappa", "Band"],
        k.entries.map((e) => [e.weighting, fmt(e.coefficient), (e.band ?? "").replaceAll("_", " ")]),
      ),
    ];
  });

document.getElementById("alpha").onclick = () =>
  show("alpha-out", () => {
    const a = JSON.parse(alpha(document.getElementById("matrix").value));
    const head = el("p", {}, `alpha = ${fmt(a.alpha)} over ${a.k} items${a.note ? ` (${a.note})` : ""}`);
    const rows = a.alpha_if_deleted.map(([item, v]) => [item, fmt(v)]);
    return rows.length ? [head, table(["Item deleted", "Alpha"], rows)] : [head];
  });
