// Page wiring: one session at a time against the recommendation service.

import { ApiClient, type CardInfo, type Recommendation } from "./api.js";
import {
  barWidths,
  cardIndex,
  colorFor,
  countSuffix,
  formatDistance,
  progressLabel,
  rarityTag,
} from "./format.js";
import { scatterSvg } from "./scatter.js";
import {
  applyPick,
  parsePack,
  samplePack,
  viewFromSession,
  type DraftView,
} from "./state.js";

const api = new ApiClient("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

const modelSelect = el<HTMLSelectElement>("model-select");
const newSessionBtn = el<HTMLButtonElement>("new-session");
const packInput = el<HTMLTextAreaElement>("pack-input");
const suggestBtn = el<HTMLButtonElement>("suggest");
const randomPackBtn = el<HTMLButtonElement>("random-pack");
const rankedList = el<HTMLOListElement>("ranked");
const poolList = el<HTMLUListElement>("pool");
const historyList = el<HTMLOListElement>("history");
const progress = el<HTMLSpanElement>("progress");
const statusLine = el<HTMLParagraphElement>("status");
const scatterBox = el<HTMLDivElement>("scatter");
const varianceNote = el<HTMLParagraphElement>("variance");
const sessionPanel = el<HTMLElement>("session-panel");

let cards: CardInfo[] = [];
let byId = new Map<number, CardInfo>();
let view: DraftView | null = null;
let lastPack: number[] = [];

function setStatus(message: string, isError = false): void {
  statusLine.textContent = message;
  statusLine.className = isError ? "status error" : "status";
}

function cardLabel(cardId: number): string {
  const card = byId.get(cardId);
  return card ? `${card.name} [${rarityTag(card.rarity)}]` : `#${cardId}`;
}

function renderView(): void {
  if (!view) {
    sessionPanel.hidden = true;
    return;
  }
  sessionPanel.hidden = false;
  progress.textContent =
    progressLabel(view.anchorSize, view.pickCap) +
    (view.complete ? " - draft complete" : "");
  poolList.replaceChildren(
    ...[...view.pool.entries()]
      .sort((a, b) => a[0] - b[0])
      .map(([cardId, count]) => {
        const item = document.createElement("li");
        const card = byId.get(cardId);
        if (card) {
          item.style.borderLeftColor = colorFor(card.color_class);
        }
        item.textContent = cardLabel(cardId) + countSuffix(count);
        return item;
      }),
  );
  historyList.replaceChildren(
    ...view.history.map((entry) => {
      const item = document.createElement("li");
      item.textContent = cardLabel(entry.picked);
      return item;
    }),
  );
}

function renderRecommendation(rec: Recommendation): void {
  const widths = barWidths(rec.ranked);
  rankedList.replaceChildren(
    ...rec.ranked.map((row, i) => {
      const item = document.createElement("li");
      const bar = document.createElement("div");
      bar.className = "bar";
      bar.style.width = `${Math.round(widths[i] * 100)}%`;
      const label = document.createElement("span");
      label.textContent = `${cardLabel(row.card_id)} (${formatDistance(row.distance)})`;
      const take = document.createElement("button");
      take.textContent = "take";
      take.disabled = view === null || view.complete;
      take.addEventListener("click", () => {
        void commitPick(row.card_id);
      });
      item.append(bar, label, take);
      return item;
    }),
  );
}

async function refreshSession(sessionId: string): Promise<void> {
  view = viewFromSession(await api.session(sessionId));
  renderView();
}

async function startSession(): Promise<void> {
  try {
    const created = await api.createSession(modelSelect.value);
    await refreshSession(created.session);
    rankedList.replaceChildren();
    packInput.value = "";
    setStatus(`session ${created.session.slice(0, 8)} on ${created.model}`);
    await loadScatter(modelSelect.value);
  } catch (err) {
    setStatus(String((err as Error).message), true);
  }
}

async function suggest(): Promise<void> {
  if (!view) {
    return;
  }
  try {
    lastPack = parsePack(packInput.value, cards);
    const rec = await api.recommend(view.session, lastPack);
    renderRecommendation(rec);
    setStatus(`ranked ${rec.ranked.length} cards (what-if: nothing saved)`);
  } catch (err) {
    setStatus(String((err as Error).message), true);
  }
}

async function commitPick(cardId: number): Promise<void> {
  if (!view) {
    return;
  }
  try {
    const result = await api.pick(view.session, lastPack, cardId);
    view = applyPick(view, lastPack, cardId);
    renderView();
    rankedList.replaceChildren();
    packInput.value = "";
    setStatus(
      result.complete
        ? "draft complete"
        : `took ${cardLabel(cardId)}; enter the next pack`,
    );
  } catch (err) {
    setStatus(String((err as Error).message), true);
    if (view) {
      await refreshSession(view.session);
    }
  }
}

async function loadScatter(modelId: string): Promise<void> {
  try {
    const emb = await api.embeddings(modelId);
    scatterBox.innerHTML = scatterSvg(emb.points);
    const [vx, vy] = emb.explained_variance;
    varianceNote.textContent =
      `2-d projection of the ${emb.embedding_dim}-d embedding ` +
      `(explains ${((vx + vy) * 100).toFixed(0)}% of variance)`;
  } catch (err) {
    setStatus(String((err as Error).message), true);
  }
}

async function boot(): Promise<void> {
  try {
    const [cardsResp, modelsResp] = await Promise.all([
      api.cards(),
      api.models(),
    ]);
    cards = cardsResp.cards;
    byId = cardIndex(cards);
    modelSelect.replaceChildren(
      ...modelsResp.models.map((model) => {
        const option = document.createElement("option");
        option.value = model.id;
        option.textContent = `${model.id} (d=${model.embedding_dim})`;
        return option;
      }),
    );
    if (modelsResp.models.length > 0) {
      await loadScatter(modelsResp.models[0].id);
    }
    setStatus(`${cards.length} cards, ${modelsResp.models.length} models`);
  } catch (err) {
    setStatus(String((err as Error).message), true);
  }
}

newSessionBtn.addEventListener("click", () => void startSession());
suggestBtn.addEventListener("click", () => void suggest());
randomPackBtn.addEventListener("click", () => {
  // Packs shrink by one per pick and reset each 15-pick round.
  const size = view ? 15 - (view.anchorSize % 15) : 15;
  packInput.value = samplePack(cards.length, size).join(", ");
});
modelSelect.addEventListener("change", () => void loadScatter(modelSelect.value));

void boot();
