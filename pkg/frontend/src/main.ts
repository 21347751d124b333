/** DOM wiring: file input, granularity slider, cluster picker, panels.
 *
 * Everything here delegates to the pure modules; no network calls are made,
 * the page works from a local file.
 */

import { Dim } from "./document.js";
import { matrixCsv, MatrixKind } from "./matrices.js";
import {
  ExplorerState,
  loadDocument,
  selectCluster,
  setGranularity,
  setMatrixKind,
} from "./state.js";
import {
  dendrogramSvg,
  dendrogramView,
  heatmapSvg,
  heatmapView,
  typicalityView,
} from "./views.js";

let state: ExplorerState | null = null;

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing element #${id}`);
  }
  return found as T;
}

function showError(message: string): void {
  const banner = el<HTMLDivElement>("error-banner");
  banner.textContent = message;
  banner.style.display = message ? "block" : "none";
}

function render(): void {
  if (!state) {
    return;
  }
  const clusters = el<HTMLSelectElement>("cluster-select");
  clusters.innerHTML = "";
  state.cut.seqValues.forEach((values, idx) => {
    const option = document.createElement("option");
    option.value = String(idx);
    const label = values.slice(0, 4).join(", ") + (values.length > 4 ? ", ..." : "");
    option.textContent = `cluster ${idx} (${values.length}): ${label}`;
    option.selected = idx === state!.selectedCluster;
    clusters.appendChild(option);
  });

  el<HTMLDivElement>("heatmap").innerHTML = heatmapSvg(heatmapView(state));
  for (const dim of ["S", "T", "E"] as Dim[]) {
    el<HTMLDivElement>(`dendrogram-${dim}`).innerHTML = dendrogramSvg(
      dendrogramView(state, dim),
    );
  }
  const typ = typicalityView(state);
  el<HTMLDivElement>("typicality").innerHTML =
    `<h3>most typical of cluster ${typ.cluster}</h3>` +
    "<ol>" +
    typ.entries
      .map(([label, tau]) => `<li>${label} <small>(${tau.toFixed(2)})</small></li>`)
      .join("") +
    "</ol>";
  el<HTMLSpanElement>("grid-shape").textContent =
    `${state.cut.seqValues.length} x ${state.cut.intervals.length} x ` +
    `${state.cut.eventValues.length}`;
}

function wire(): void {
  el<HTMLInputElement>("file-input").addEventListener("change", (event) => {
    const file = (event.target as HTMLInputElement).files?.[0];
    if (!file) {
      return;
    }
    file.text().then((text) => {
      try {
        state = loadDocument(text);
        showError("");
        el<HTMLInputElement>("level-slider").value = "0";
        render();
      } catch (err) {
        state = null;
        showError((err as Error).message);
      }
    });
  });

  el<HTMLInputElement>("level-slider").addEventListener("input", (event) => {
    if (!state) {
      return;
    }
    const level = Number((event.target as HTMLInputElement).value);
    state = setGranularity(state, "all", level);
    render();
  });

  el<HTMLSelectElement>("cluster-select").addEventListener("change", (event) => {
    if (!state) {
      return;
    }
    state = selectCluster(state, Number((event.target as HTMLSelectElement).value));
    render();
  });

  for (const kind of ["freq", "cmi", "contrast"] as MatrixKind[]) {
    el<HTMLButtonElement>(`kind-${kind}`).addEventListener("click", () => {
      if (!state) {
        return;
      }
      state = setMatrixKind(state, kind);
      render();
    });
  }

  el<HTMLButtonElement>("download-csv").addEventListener("click", () => {
    if (!state) {
      return;
    }
    const text = matrixCsv(state.cut, state.selectedCluster, state.matrixKind);
    const blob = new Blob([text], { type: "text/csv" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = `${state.matrixKind}_cluster${state.selectedCluster}.csv`;
    link.click();
    URL.revokeObjectURL(link.href);
  });
}

wire();
