/**
 * Application shell: wires the service client, view state, and render
 * modules together. The shell moves payloads between fetch and DOM and
 * never derives model numbers of its own.
 */

import {
  ApiError,
  createRegion,
  getCompare,
  getMarginal,
  getRisk,
  listRegions,
  postScenario,
  postStations,
} from "./api.js";
import {
  SCENARIO_THROTTLE_MS,
  renderControls,
  renderSummary,
  throttle,
} from "./controls.js";
import { renderBrackets, renderHistogram, renderObjectives } from "./histogram.js";
import { JobController } from "./jobs.js";
import { renderChoropleth, renderCompareMap } from "./map.js";
import {
  addStation,
  applyPreset,
  dropStation,
  initialState,
  pickUpStation,
  removeStation,
  scenarioRequest,
  selectLayer,
  setFbWeight,
  stationsFromCells,
  stationsRequest,
  type LayerKey,
  type ViewState,
} from "./state.js";
import { renderSweep } from "./sweep.js";
import type { ComparePayload, JobRecord, RiskCell, RiskPayload } from "./types.js";

const PANELS = [
  ["region-bar", "div"],
  ["status-banner", "div"],
  ["controls", "div"],
  ["summary", "div"],
  ["station-strip", "div"],
  ["map", "div"],
  ["objectives", "div"],
  ["compare-map", "div"],
  ["histogram", "div"],
  ["brackets", "div"],
  ["sweep-panel", "div"],
] as const;

export class App {
  state: ViewState = initialState();
  risk: RiskPayload | null = null;
  compare: ComparePayload | null = null;
  readonly jobs = new JobController();
  readonly panels: Record<string, HTMLElement> = {};
  private scenarioAbort: AbortController | null = null;
  private readonly throttledScenario: () => void;

  constructor(readonly root: HTMLElement, private pollMs = 1000) {
    for (const [id, tag] of PANELS) {
      const node = document.createElement(tag);
      node.id = id;
      root.appendChild(node);
      this.panels[id] = node;
    }
    this.throttledScenario = throttle(() => {
      void this.pushScenario();
    }, SCENARIO_THROTTLE_MS);
  }

  async boot(): Promise<void> {
    this.renderRegionBar([]);
    try {
      const { regions } = await listRegions();
      this.renderRegionBar(regions.map((r) => r.region_id));
      if (regions.length > 0) {
        await this.selectRegion(regions[0].region_id);
      } else {
        this.renderAll();
      }
    } catch (err) {
      this.showError(err);
      this.renderAll();
    }
  }

  private renderRegionBar(regionIds: string[]): void {
    const bar = this.panels["region-bar"];
    bar.replaceChildren();
    const select = document.createElement("select");
    select.id = "region-select";
    for (const rid of regionIds) {
      const opt = document.createElement("option");
      opt.value = rid;
      opt.textContent = rid;
      opt.selected = rid === this.state.regionId;
      select.appendChild(opt);
    }
    select.addEventListener("change", () => {
      void this.selectRegion(select.value);
    });
    const create = document.createElement("button");
    create.id = "new-region";
    create.textContent = "New synthetic region";
    create.addEventListener("click", () => {
      void this.createSynthRegion();
    });
    bar.append(select, create);
  }

  async createSynthRegion(): Promise<void> {
    try {
      const created = await createRegion({ synth: { seed: 3, n: 12, m: 12 } });
      const { regions } = await listRegions();
      this.state = { ...this.state, regionId: created.region_id };
      this.renderRegionBar(regions.map((r) => r.region_id));
      await this.selectRegion(created.region_id);
    } catch (err) {
      this.showError(err);
    }
  }

  async selectRegion(regionId: string): Promise<void> {
    try {
      const risk = await getRisk(regionId);
      this.risk = risk;
      this.compare = null;
      this.state = {
        ...this.state,
        regionId,
        scenarioName: risk.scenario.name,
        weights: { ...risk.scenario.outcome_weights },
        stations: stationsFromCells(risk.cells),
        stationsEdited: false,
        movingStation: null,
        compareMode: false,
      };
      this.renderAll();
    } catch (err) {
      this.showError(err);
    }
  }

  /** Refetch the per-cell field after a server-side change. */
  async refreshRisk(): Promise<void> {
    if (!this.state.regionId) return;
    try {
      this.risk = await getRisk(this.state.regionId);
      this.renderAll();
    } catch (err) {
      this.showError(err);
    }
  }

  /** POST the current scenario; newer posts abort superseded ones. */
  async pushScenario(): Promise<void> {
    if (!this.state.regionId) return;
    this.scenarioAbort?.abort();
    const controller = new AbortController();
    this.scenarioAbort = controller;
    try {
      const resp = await postScenario(
        this.state.regionId,
        scenarioRequest(this.state),
        controller.signal,
      );
      renderSummary(this.panels["summary"], resp.risk_summary);
      this.clearError();
    } catch (err) {
      if ((err as Error).name !== "AbortError") this.showError(err);
    }
  }

  onWeight(wFB: number): void {
    this.state = setFbWeight(this.state, wFB);
    this.renderControlsOnly();
    this.throttledScenario();
  }

  /** Drag end: settle the scenario and recolor the map. */
  async onWeightCommit(): Promise<void> {
    await this.pushScenario();
    await this.refreshRisk();
  }

  async onPreset(name: string): Promise<void> {
    this.state = applyPreset(this.state, name);
    this.renderControlsOnly();
    await this.pushScenario();
    await this.refreshRisk();
  }

  onLayer(layer: string): void {
    this.state = selectLayer(this.state, layer as LayerKey);
    this.renderAll();
  }

  onCellClick(cell: RiskCell): void {
    if (this.state.movingStation !== null) {
      this.state = dropStation(this.state, cell);
    } else if (!cell.station) {
      this.state = addStation(this.state, cell);
    }
    this.renderControlsOnly();
    this.renderStationStrip();
  }

  onStationClick(cell: RiskCell): void {
    const idx = (this.state.stations ?? []).findIndex(
      (s) => s.lat === cell.center_ll[0] && s.lon === cell.center_ll[1],
    );
    if (idx >= 0) {
      this.state = pickUpStation(this.state, idx);
      this.renderStationStrip();
    }
  }

  async onApplyStations(): Promise<void> {
    if (!this.state.regionId || !this.state.stations) return;
    try {
      await postStations(this.state.regionId, stationsRequest(this.state));
      this.state = { ...this.state, stationsEdited: false, movingStation: null };
      await this.refreshRisk();
    } catch (err) {
      this.showError(err);
    }
  }

  async onOptimize(kind: "relocate" | "add" | "sweep", delta: number): Promise<void> {
    if (!this.state.regionId) return;
    const regionId = this.state.regionId;
    const params =
      kind === "add" ? { delta } : kind === "sweep" ? { max_delta: delta } : {};
    await this.jobs.run(
      regionId,
      kind,
      params,
      {
        onStatus: (status) => this.setStatus(`job ${status}`),
        onDone: (record) => {
          void this.showJobResult(regionId, record);
        },
        onError: (message) => this.showError(new Error(message)),
      },
      this.pollMs,
    );
  }

  private async showJobResult(regionId: string, record: JobRecord): Promise<void> {
    try {
      if (record.kind === "sweep") {
        const sweep = await getMarginal(regionId, record.job_id);
        renderSweep(this.panels["sweep-panel"], sweep);
      } else {
        const compare = await getCompare(regionId, record.job_id);
        this.compare = compare;
        this.state = { ...this.state, compareMode: true, lastJobId: record.job_id };
        this.renderCompare();
      }
      this.setStatus(`job ${record.job_id} done`);
    } catch (err) {
      this.showError(err);
    }
  }

  private renderCompare(): void {
    if (!this.compare || !this.risk) return;
    renderObjectives(this.panels["objectives"], this.compare);
    renderHistogram(this.panels["histogram"], this.compare.histogram);
    renderBrackets(this.panels["brackets"], this.compare.fields);
    renderCompareMap(this.panels["compare-map"], this.risk.cells, {
      percentChange: this.compare.fields.percent_change,
      beforeCells: this.compare.before?.open_cells ?? [],
      afterCells: this.compare.open_cells,
    });
  }

  private renderControlsOnly(): void {
    renderControls(this.panels["controls"], this.state, {
      onWeight: (w) => this.onWeight(w),
      onPreset: (name) => {
        void this.onPreset(name);
      },
      onLayer: (layer) => this.onLayer(layer),
      onOptimize: (kind, delta) => {
        void this.onOptimize(kind, delta);
      },
      onApplyStations: () => {
        void this.onApplyStations();
      },
    });
    const slider = this.panels["controls"].querySelector<HTMLInputElement>("#w-fb");
    slider?.addEventListener("change", () => {
      void this.onWeightCommit();
    });
  }

  private renderStationStrip(): void {
    const strip = this.panels["station-strip"];
    strip.replaceChildren();
    const count = document.createElement("span");
    count.id = "station-count";
    count.textContent = `${(this.state.stations ?? []).length} stations`;
    strip.appendChild(count);
    if (this.state.movingStation !== null) {
      const note = document.createElement("span");
      note.id = "moving-note";
      note.textContent = " moving a station: click a cell to drop it, or ";
      const remove = document.createElement("button");
      remove.id = "remove-station";
      remove.textContent = "remove it";
      remove.addEventListener("click", () => {
        this.state = removeStation(this.state, this.state.movingStation ?? -1);
        this.renderControlsOnly();
        this.renderStationStrip();
      });
      strip.append(note, remove);
    }
  }

  renderAll(): void {
    this.renderControlsOnly();
    this.renderStationStrip();
    if (this.risk) {
      renderSummary(this.panels["summary"], this.risk.summary);
      renderChoropleth(this.panels["map"], this.risk.cells, this.state.layer, {
        onCellClick: (cell) => this.onCellClick(cell),
        onStationClick: (cell) => this.onStationClick(cell),
      });
    } else {
      renderChoropleth(this.panels["map"], [], this.state.layer);
    }
    if (this.state.compareMode) this.renderCompare();
  }

  private setStatus(text: string): void {
    this.panels["status-banner"].className = "status";
    this.panels["status-banner"].textContent = text;
  }

  private showError(err: unknown): void {
    const message =
      err instanceof ApiError
        ? err.message
        : err instanceof Error
          ? err.message
          : String(err);
    this.panels["status-banner"].className = "status error";
    this.panels["status-banner"].textContent = message;
  }

  private clearError(): void {
    if (this.panels["status-banner"].className.includes("error")) {
      this.panels["status-banner"].className = "status";
      this.panels["status-banner"].textContent = "";
    }
  }
}

export function initApp(root: HTMLElement, pollMs = 1000): App {
  return new App(root, pollMs);
}

const mount = typeof document !== "undefined" ? document.getElementById("app") : null;
if (mount) {
  void initApp(mount).boot();
}
