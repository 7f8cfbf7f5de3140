/**
 * Browser entry point: wires the editor, dashboard and frontier explorer
 * onto the page.  All state flows through SessionStore; this file only
 * binds DOM events and re-renders on store notifications.
 */

import { ApiClient } from './api.js';
import { histogramSvg, statsTableHtml } from './dashboard.js';
import { FrontierExplorer, frontierSvg } from './frontier.js';
import { SessionStore } from './store.js';
import { SENTIMENT_PRESETS, ViewDraft } from './viewEditor.js';
import { ContractJson, InfeasibleViewsError } from './types.js';

const API_BASE = (window as { ENTROPOOL_API?: string }).ENTROPOOL_API
  ?? 'http://127.0.0.1:8321';

async function bootstrap(): Promise<void> {
  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app container');
  const api = new ApiClient(API_BASE);

  const panelResponse = await fetch('./panel.json');
  const panel = (await panelResponse.json()) as {
    factor_names: string[];
    data: number[][];
  };
  const created = await api.createSession(panel.factor_names, panel.data);
  const store = new SessionStore(api, created.session_id);
  await store.refresh();

  const bookResponse = await fetch('./book.json').catch(() => null);
  const book: ContractJson[] = bookResponse && bookResponse.ok
    ? await bookResponse.json()
    : [];
  const explorer = new FrontierExplorer(store, {
    book,
    gamma: 0.95,
    lambdas: [0.0, 0.01, 0.02, 0.03, 0.05, 0.1, 1000.0],
    position_cap: 100.0,
  });

  const editor = new ViewDraft();
  const statsDiv = document.createElement('div');
  const histDiv = document.createElement('div');
  const frontierDiv = document.createElement('div');
  const statusDiv = document.createElement('div');
  const form = buildForm(editor, async () => {
    try {
      await store.putViews('workbench', editor.confidence, [editor.toViewJson()]);
      await store.solve();
      await store.refreshStatistics();
      const column = editor.columns[0];
      await store.refreshHistogram(column).catch(() => undefined);
    } catch (error) {
      if (error instanceof InfeasibleViewsError) {
        editor.serverRejection = error.message;
        render();
        return;
      }
      throw error;
    }
  });
  root.append(statusDiv, form, statsDiv, histDiv, frontierDiv);

  function render(): void {
    statusDiv.textContent = store.isSolving
      ? `solving... (revision ${store.currentRevision})`
      : `revision ${store.currentRevision}`
        + (store.lastWarning ? ` - warning: ${store.lastWarning}` : '');
    const stats = store.stats;
    statsDiv.innerHTML = stats ? statsTableHtml(stats) : '<em>no statistics yet</em>';
    const column = editor.columns[0];
    const hist = column ? store.histogramFor(column) : null;
    histDiv.innerHTML = hist ? histogramSvg(hist) : '';
    const curve = store.frontierData ?? explorer.currentCurve;
    frontierDiv.innerHTML = curve && curve.computed
      ? frontierSvg(curve.points)
      : '<em>no frontier computed</em>';
    const rejection = editor.serverRejection;
    if (rejection) {
      const note = document.createElement('p');
      note.className = 'rejection';
      note.textContent = rejection;
      form.append(note);
    }
  }

  store.subscribe(render);
  await store.refreshStatistics();
  render();
}

function buildForm(draft: ViewDraft, onSubmit: () => Promise<void>): HTMLFormElement {
  const form = document.createElement('form');
  form.innerHTML = `
    <label>column <input name="column" value=""></label>
    <label>direction
      <select name="direction">
        <option value="<=">&le;</option>
        <option value="=" selected>=</option>
        <option value=">=">&ge;</option>
      </select>
    </label>
    <label>target value <input name="target" type="number" step="any" value="0"></label>
    <label>confidence <input name="confidence" type="range" min="0" max="1" step="0.01" value="1"></label>
    <span class="presets"></span>
    <button type="submit">submit view</button>`;
  const presets = form.querySelector('.presets')!;
  for (const preset of SENTIMENT_PRESETS) {
    const button = document.createElement('button');
    button.type = 'button';
    button.textContent = preset.label;
    button.addEventListener('click', () => {
      draft.applyPreset(preset);
      (form.elements.namedItem('target') as HTMLInputElement).value =
        String(preset.kappa);
    });
    presets.append(button);
  }
  const sync = () => {
    draft.columns = [(form.elements.namedItem('column') as HTMLInputElement).value];
    draft.direction = (form.elements.namedItem('direction') as HTMLSelectElement)
      .value as ViewDraft['direction'];
    draft.targetValue = Number(
      (form.elements.namedItem('target') as HTMLInputElement).value);
    draft.confidence = Number(
      (form.elements.namedItem('confidence') as HTMLInputElement).value);
    draft.touch();
    (form.querySelector('button[type=submit]') as HTMLButtonElement).disabled =
      !draft.submittable;
  };
  form.addEventListener('input', sync);
  form.addEventListener('submit', (event) => {
    event.preventDefault();
    sync();
    if (draft.submittable) void onSubmit();
  });
  return form;
}

void bootstrap();
