/**
 * Minimal slippy-style map: Web Mercator projection fitted to a bounding
 * box, a tile background, and named overlay layers for markers and cells.
 *
 * With a tile URL template the background is standard z/x/y raster tiles;
 * without one it falls back to a plain labeled grid so tests and offline
 * sessions render hermetically.
 */

export interface LatLng {
  lat: number;
  lng: number;
}

export interface MapOptions {
  width: number;
  height: number;
  tileUrlTemplate?: string | null;
  tileSizePx?: number;
}

function mercator(p: LatLng): { mx: number; my: number } {
  const mx = (p.lng + 180) / 360;
  const phi = (p.lat * Math.PI) / 180;
  const my = (1 - Math.log(Math.tan(phi) + 1 / Math.cos(phi)) / Math.PI) / 2;
  return { mx, my };
}

export class MapView {
  readonly root: HTMLElement;
  private readonly tileLayer: HTMLElement;
  private readonly layers = new Map<string, HTMLElement>();
  private readonly opts: Required<MapOptions>;
  private scale = 1;
  private offsetX = 0;
  private offsetY = 0;

  constructor(container: HTMLElement, opts: MapOptions) {
    this.opts = {
      tileUrlTemplate: null,
      tileSizePx: 64,
      ...opts,
    };
    this.root = container;
    this.root.classList.add("map-view");
    this.root.style.position = "relative";
    this.root.style.width = `${this.opts.width}px`;
    this.root.style.height = `${this.opts.height}px`;
    this.root.style.overflow = "hidden";
    this.tileLayer = document.createElement("div");
    this.tileLayer.className = "tile-layer";
    this.root.appendChild(this.tileLayer);
  }

  /** Fit the viewport to a lat/lng bounding box (plus a small margin). */
  fitBounds(a: LatLng, b: LatLng): void {
    const p1 = mercator(a);
    const p2 = mercator(b);
    const minX = Math.min(p1.mx, p2.mx);
    const maxX = Math.max(p1.mx, p2.mx);
    const minY = Math.min(p1.my, p2.my);
    const maxY = Math.max(p1.my, p2.my);
    const spanX = Math.max(maxX - minX, 1e-9);
    const spanY = Math.max(maxY - minY, 1e-9);
    this.scale = 0.92 * Math.min(this.opts.width / spanX, this.opts.height / spanY);
    this.offsetX = (minX + maxX) / 2;
    this.offsetY = (minY + maxY) / 2;
    this.renderTiles();
  }

  project(p: LatLng): { x: number; y: number } {
    const { mx, my } = mercator(p);
    return {
      x: this.opts.width / 2 + (mx - this.offsetX) * this.scale,
      y: this.opts.height / 2 + (my - this.offsetY) * this.scale,
    };
  }

  unproject(x: number, y: number): LatLng {
    const mx = (x - this.opts.width / 2) / this.scale + this.offsetX;
    const my = (y - this.opts.height / 2) / this.scale + this.offsetY;
    const lng = mx * 360 - 180;
    const n = Math.PI * (1 - 2 * my);
    const lat = (Math.atan(Math.sinh(n)) * 180) / Math.PI;
    return { lat, lng };
  }

  /** Pixel size of a metric length at the current viewport latitude. */
  metersToPx(meters: number): number {
    const lat = this.unproject(this.opts.width / 2, this.opts.height / 2).lat;
    const mercatorUnitsPerMeter =
      1 / (40_075_016.686 * Math.cos((lat * Math.PI) / 180));
    return Math.max(2, meters * mercatorUnitsPerMeter * this.scale);
  }

  layer(name: string): HTMLElement {
    let el = this.layers.get(name);
    if (!el) {
      el = document.createElement("div");
      el.className = `map-layer map-layer-${name}`;
      el.style.position = "absolute";
      el.style.inset = "0";
      this.root.appendChild(el);
      this.layers.set(name, el);
    }
    return el;
  }

  clearLayer(name: string): void {
    this.layer(name).replaceChildren();
  }

  onClick(handler: (p: LatLng) => void): void {
    this.root.addEventListener("click", (event) => {
      const rect = this.root.getBoundingClientRect();
      const point = this.unproject(event.clientX - rect.left, event.clientY - rect.top);
      handler(point);
    });
  }

  private renderTiles(): void {
    this.tileLayer.replaceChildren();
    const size = this.opts.tileSizePx;
    const cols = Math.ceil(this.opts.width / size);
    const rows = Math.ceil(this.opts.height / size);
    for (let r = 0; r < rows; r++) {
      for (let c = 0; c < cols; c++) {
        const tile = document.createElement(this.opts.tileUrlTemplate ? "img" : "div");
        tile.className = this.opts.tileUrlTemplate ? "tile tile-raster" : "tile tile-grid";
        tile.style.position = "absolute";
        tile.style.left = `${c * size}px`;
        tile.style.top = `${r * size}px`;
        tile.style.width = `${size}px`;
        tile.style.height = `${size}px`;
        if (this.opts.tileUrlTemplate) {
          const zoom = Math.max(0, Math.round(Math.log2(this.scale / size)));
          const center = this.unproject(c * size + size / 2, r * size + size / 2);
          const m = mercator(center);
          const n = 2 ** zoom;
          const tx = Math.floor(m.mx * n);
          const ty = Math.floor(m.my * n);
          (tile as HTMLImageElement).src = this.opts.tileUrlTemplate
            .replace("{z}", String(zoom))
            .replace("{x}", String(tx))
            .replace("{y}", String(ty));
        } else {
          tile.style.border = "1px solid #e4e4e4";
          const corner = this.unproject(c * size, r * size);
          tile.title = `${corner.lat.toFixed(3)}, ${corner.lng.toFixed(3)}`;
        }
        this.tileLayer.appendChild(tile);
      }
    }
  }
}
