// Discovery console: query an entity, inspect the ranked related entities,
// and pivot by clicking any result to make it the next query.
//
// All numbers shown come verbatim from the API (distances formatted to four
// decimals); nothing is recomputed client-side. At most one query request is
// in flight: newer searches abort older ones.

import { ApiError, QueryPayload, fetchStats, queryEntity, suggestEntities } from "./api.js";

const DEBOUNCE_MS = 150;
const SUGGESTION_LIMIT = 10;

export interface AppHandle {
  search(entity: string, k?: number): Promise<void>;
  whenIdle(): Promise<void>;
  state: {
    history: string[];
    current: QueryPayload | null;
  };
}

export function formatDistance(d: number): string {
  return d.toFixed(4);
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function initApp(root: HTMLElement, apiBase = ""): AppHandle {
  const state: AppHandle["state"] = { history: [], current: null };
  let inflight: AbortController | null = null;
  let pending: Promise<void> = Promise.resolve();
  let debounceTimer: ReturnType<typeof setTimeout> | null = null;
  let suggestions: string[] = [];
  let selectedSuggestion = -1;
  let hubsVisible = false;

  root.innerHTML = "";
  const header = el("header");
  header.appendChild(el("h1", "", "termite console"));
  const statsLine = el("div", "stats", "");
  header.appendChild(statsLine);
  root.appendChild(header);

  const form = el("form", "search-form");
  const inputWrap = el("div", "input-wrap");
  const queryInput = el("input");
  queryInput.id = "query-input";
  queryInput.autocomplete = "off";
  queryInput.placeholder = "entity…";
  const suggestionsList = el("ul", "suggestions hidden");
  suggestionsList.id = "suggestions";
  inputWrap.appendChild(queryInput);
  inputWrap.appendChild(suggestionsList);
  const kInput = el("input");
  kInput.id = "k-input";
  kInput.type = "number";
  kInput.min = "1";
  kInput.value = "10";
  const submit = el("button", "", "search");
  submit.type = "submit";
  form.appendChild(inputWrap);
  form.appendChild(kInput);
  form.appendChild(submit);
  root.appendChild(form);

  const banner = el("div", "banner hidden");
  banner.id = "error-banner";
  root.appendChild(banner);

  const breadcrumbs = el("nav", "breadcrumbs");
  breadcrumbs.id = "breadcrumbs";
  root.appendChild(breadcrumbs);

  const resultsHeading = el("div", "results-heading hidden");
  root.appendChild(resultsHeading);
  const resultsBody = el("tbody");
  const resultsTable = el("table", "results hidden");
  resultsTable.id = "results";
  const head = el("thead");
  const headRow = el("tr");
  for (const title of ["#", "entity", "distance", ""]) {
    headRow.appendChild(el("th", "", title));
  }
  head.appendChild(headRow);
  resultsTable.appendChild(head);
  resultsTable.appendChild(resultsBody);
  root.appendChild(resultsTable);

  const hubsToggle = el("button", "hubs-toggle hidden");
  hubsToggle.id = "hubs-toggle";
  hubsToggle.type = "button";
  const hubsList = el("ul", "hubs hidden");
  hubsList.id = "removed-hubs";
  root.appendChild(hubsToggle);
  root.appendChild(hubsList);

  function showError(message: string): void {
    banner.textContent = message;
    banner.classList.remove("hidden");
  }

  function clearError(): void {
    banner.classList.add("hidden");
    banner.textContent = "";
  }

  function renderBreadcrumbs(): void {
    breadcrumbs.innerHTML = "";
    state.history.forEach((entity, index) => {
      const crumb = el("a", "crumb", entity);
      crumb.href = "#";
      crumb.addEventListener("click", (event) => {
        event.preventDefault();
        const target = state.history[index];
        state.history = state.history.slice(0, index);
        void runSearch(target, currentK(), false);
      });
      breadcrumbs.appendChild(crumb);
      if (index < state.history.length - 1) {
        breadcrumbs.appendChild(el("span", "sep", "›"));
      }
    });
  }

  function renderHubs(): void {
    const payload = state.current;
    if (!payload || payload.removed_hubs.length === 0) {
      hubsToggle.classList.add("hidden");
      hubsList.classList.add("hidden");
      return;
    }
    hubsToggle.classList.remove("hidden");
    hubsToggle.textContent = `${hubsVisible ? "hide" : "show"} removed hubs (${payload.removed_hubs.length})`;
    hubsList.innerHTML = "";
    for (const hub of payload.removed_hubs) {
      hubsList.appendChild(
        el("li", "", `${hub.entity}  d=${formatDistance(hub.distance)}  hubness=${hub.hubness}`),
      );
    }
    hubsList.classList.toggle("hidden", !hubsVisible);
  }

  function renderResults(): void {
    const payload = state.current;
    resultsBody.innerHTML = "";
    if (!payload) {
      resultsTable.classList.add("hidden");
      resultsHeading.classList.add("hidden");
      return;
    }
    resultsHeading.textContent = `related to ${payload.query}`;
    resultsHeading.classList.remove("hidden");
    resultsTable.classList.remove("hidden");
    payload.results.forEach((entry, index) => {
      const row = el("tr", "result-row");
      row.appendChild(el("td", "rank", String(index + 1)));
      const entityCell = el("td", "entity", entry.entity);
      row.appendChild(entityCell);
      const distanceCell = el("td", "distance", formatDistance(entry.distance));
      if (entry.confidence !== undefined) {
        distanceCell.title = `confidence ${entry.confidence.toFixed(4)}`;
      }
      row.appendChild(distanceCell);
      const barCell = el("td", "bar-cell");
      const bar = el("div", "bar");
      // closeness bar: full width at distance 0, empty at the cosine maximum
      bar.style.width = `${Math.max(0, Math.min(100, (1 - entry.distance / 2) * 100))}%`;
      barCell.appendChild(bar);
      row.appendChild(barCell);
      row.addEventListener("click", () => {
        pivot(entry.entity);
      });
      resultsBody.appendChild(row);
    });
  }

  function renderSuggestions(): void {
    suggestionsList.innerHTML = "";
    if (suggestions.length === 0) {
      suggestionsList.classList.add("hidden");
      return;
    }
    suggestionsList.classList.remove("hidden");
    suggestions.forEach((name, index) => {
      const item = el("li", index === selectedSuggestion ? "selected" : "", name);
      item.addEventListener("mousedown", (event) => {
        event.preventDefault();
        acceptSuggestion(index);
      });
      suggestionsList.appendChild(item);
    });
  }

  function clearSuggestions(): void {
    suggestions = [];
    selectedSuggestion = -1;
    renderSuggestions();
  }

  function acceptSuggestion(index: number): void {
    if (index >= 0 && index < suggestions.length) {
      queryInput.value = suggestions[index];
      clearSuggestions();
    }
  }

  function currentK(): number {
    const parsed = parseInt(kInput.value, 10);
    return Number.isFinite(parsed) && parsed > 0 ? parsed : 10;
  }

  async function runSearch(entity: string, k: number, pushHistory: boolean): Promise<void> {
    inflight?.abort();
    const controller = new AbortController();
    inflight = controller;
    const task = (async () => {
      try {
        const payload = await queryEntity(apiBase, entity, k, false, controller.signal);
        if (controller !== inflight) return; // a newer search superseded this one
        clearError();
        if (pushHistory && state.current) {
          state.history.push(state.current.query);
        }
        state.current = payload;
        hubsVisible = false;
        queryInput.value = entity;
        renderBreadcrumbs();
        renderResults();
        renderHubs();
      } catch (error) {
        if (error instanceof DOMException && error.name === "AbortError") return;
        if (error instanceof ApiError && error.status === 404) {
          showError(`entity not found: ${entity}`);
        } else {
          showError(`request failed: ${error instanceof Error ? error.message : error}`);
        }
      }
    })();
    pending = task;
    return task;
  }

  function pivot(entity: string): void {
    void runSearch(entity, currentK(), true);
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    clearSuggestions();
    const entity = queryInput.value.trim();
    if (entity) void runSearch(entity, currentK(), true);
  });

  queryInput.addEventListener("input", () => {
    if (debounceTimer !== null) clearTimeout(debounceTimer);
    const prefix = queryInput.value.trim();
    if (!prefix) {
      clearSuggestions();
      return; // no request for an empty prefix
    }
    debounceTimer = setTimeout(() => {
      suggestEntities(apiBase, prefix, SUGGESTION_LIMIT)
        .then((names) => {
          suggestions = names;
          selectedSuggestion = -1;
          renderSuggestions();
        })
        .catch(() => clearSuggestions());
    }, DEBOUNCE_MS);
  });

  queryInput.addEventListener("keydown", (event) => {
    if (suggestions.length === 0) return;
    if (event.key === "ArrowDown") {
      event.preventDefault();
      selectedSuggestion = (selectedSuggestion + 1) % suggestions.length;
      renderSuggestions();
    } else if (event.key === "ArrowUp") {
      event.preventDefault();
      selectedSuggestion = (selectedSuggestion - 1 + suggestions.length) % suggestions.length;
      renderSuggestions();
    } else if (event.key === "Enter" && selectedSuggestion >= 0) {
      event.preventDefault();
      acceptSuggestion(selectedSuggestion);
    } else if (event.key === "Escape") {
      clearSuggestions();
    }
  });

  hubsToggle.addEventListener("click", () => {
    hubsVisible = !hubsVisible;
    renderHubs(); // re-renders from the already-loaded payload, no request
  });

  fetchStats(apiBase)
    .then((stats) => {
      statsLine.textContent =
        `${stats.entities} entities · ${stats.dim}d · hubness cutoff ${stats.hubness_cutoff}`;
    })
    .catch(() => {
      statsLine.textContent = "";
    });

  return {
    search: (entity: string, k?: number) => runSearch(entity, k ?? currentK(), true),
    whenIdle: () => pending,
    state,
  };
}
