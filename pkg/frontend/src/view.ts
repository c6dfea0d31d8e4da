// Pure rendering: state in, HTML string out. The DOM layer swaps the
// result in and wires events; nothing here touches the document, which
// keeps rendering testable without a browser.

import type { UiSessionState } from "./state.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderBanner(state: UiSessionState): string {
  if (!state.banner) return "";
  return `<div class="banner" role="alert">${esc(state.banner)}
    <button data-action="retry">retry</button></div>`;
}

export function renderChain(state: UiSessionState): string {
  if (state.chain.length === 0) {
    return `<p class="chain-empty">Pick a first service from the catalog below.</p>`;
  }
  const items = state.chain
    .map((item) => {
      const cls = item.known ? "chain-token" : "chain-token unknown";
      const members =
        item.members.length > 1 ? ` <small>(${esc(item.members.join(", "))})</small>` : "";
      return `<li class="${cls}">${esc(item.token)}${members}</li>`;
    })
    .join("");
  return `<ol class="chain">${items}</ol>`;
}

// One row per entry, in the exact order received: the rank column must
// read 0,1,2,... top to bottom.
export function renderRecommendations(state: UiSessionState): string {
  if (state.lastRecommendations.length === 0) {
    return `<p class="recs-empty">No recommendations yet.</p>`;
  }
  const rows = state.lastRecommendations
    .map((e) => {
      const refine =
        e.members.length > 1
          ? e.members
              .map(
                (m) =>
                  `<button data-action="refine" data-token="${esc(e.token)}"` +
                  ` data-member="${esc(m)}">${esc(m)}</button>`,
              )
              .join(" ")
          : "";
      return (
        `<tr><td>${e.rank}</td>` +
        `<td><button data-action="pick" data-token="${esc(e.token)}">${esc(e.token)}</button></td>` +
        `<td>${e.score.toFixed(4)}</td><td>${e.pSuc.toFixed(4)}</td>` +
        `<td>${e.sim.toFixed(4)}</td><td>${refine}</td></tr>`
      );
    })
    .join("");
  return (
    `<table class="recs"><thead><tr>` +
    `<th>rank</th><th>token</th><th>score</th><th>pSuc</th><th>sim</th><th>refine</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderCatalog(state: UiSessionState, filter = ""): string {
  const needle = filter.toLowerCase();
  const hits = state.catalog.filter((c) => c.token.toLowerCase().includes(needle));
  const items = hits
    .slice(0, 25)
    .map(
      (c) =>
        `<li><button data-action="pick" data-token="${esc(c.token)}">` +
        `${esc(c.token)}</button> <small>x${c.frequency}</small></li>`,
    )
    .join("");
  return `<ul class="catalog">${items}</ul>`;
}

export function renderApp(state: UiSessionState, catalogFilter = ""): string {
  const notice = state.notice
    ? `<div class="notice">${esc(state.notice)}</div>`
    : "";
  const busy = state.busy ? `<span class="busy">working...</span>` : "";
  return `
${renderBanner(state)}
<header>
  <h1>Workflow composer</h1>
  <span class="session">${state.sessionId ? `session ${esc(state.sessionId.slice(0, 8))}` : "no session"}</span>
  ${busy}
</header>
${notice}
<section class="panel">
  <h2>Chain under construction</h2>
  ${renderChain(state)}
</section>
<section class="panel">
  <h2>Top-<span id="k-value">${state.k}</span> candidates</h2>
  <label>k <input id="k-input" type="number" min="1" max="50" value="${state.k}"></label>
  ${renderRecommendations(state)}
</section>
<section class="panel">
  <h2>Catalog</h2>
  <input id="catalog-filter" placeholder="search services" value="${esc(catalogFilter)}">
  ${renderCatalog(state, catalogFilter)}
</section>`;
}
