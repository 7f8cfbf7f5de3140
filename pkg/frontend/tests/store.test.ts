import { describe, expect, it } from 'vitest';

import { ApiClient, FetchLike } from '../src/api.js';
import { SessionStore } from '../src/store.js';
import { StaleRevisionError } from '../src/types.js';

interface Route {
  method: string;
  path: RegExp;
  handler: (body: unknown) => { status: number; payload: unknown };
}

function fakeFetch(routes: Route[]): FetchLike {
  return async (input, init) => {
    const method = init?.method ?? 'GET';
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    for (const route of routes) {
      if (route.method === method && route.path.test(input)) {
        const { status, payload } = route.handler(body);
        return new Response(JSON.stringify(payload), {
          status,
          headers: { 'content-type': 'application/json' },
        });
      }
    }
    return new Response('{"detail":"not found"}', { status: 404 });
  };
}

function serverDouble() {
  // minimal revision-checking session double
  const state = { revision: 0, puts: 0 };
  const routes: Route[] = [
    {
      method: 'GET',
      path: /\/sessions\/s1$/,
      handler: () => ({
        status: 200,
        payload: {
          session_id: 's1', revision: state.revision, factor_names: ['x'],
          n_scenarios: 10, users: {}, solved: false, frontier_computed: false,
        },
      }),
    },
    {
      method: 'PUT',
      path: /\/views\//,
      handler: (body) => {
        const revision = (body as { revision: number }).revision;
        if (revision !== state.revision) {
          return { status: 409, payload: { detail: 'stale' } };
        }
        state.revision += 1;
        state.puts += 1;
        return { status: 200, payload: { revision: state.revision } };
      },
    },
    {
      method: 'GET',
      path: /\/statistics$/,
      handler: () => ({
        status: 200,
        payload: { revision: state.revision, solved: false, columns: [] },
      }),
    },
  ];
  return { state, routes };
}

describe('SessionStore revision handling', () => {
  it('carries the last-seen revision into mutations', async () => {
    const { state, routes } = serverDouble();
    const store = new SessionStore(new ApiClient('http://api', fakeFetch(routes)), 's1');
    await store.refresh();
    await store.putViews('u', 1, []);
    expect(store.currentRevision).toBe(1);
    await store.putViews('u', 1, []);
    expect(store.currentRevision).toBe(2);
    expect(state.puts).toBe(2);
  });

  it('surfaces 409 and refetches instead of overwriting', async () => {
    const { state, routes } = serverDouble();
    const store = new SessionStore(new ApiClient('http://api', fakeFetch(routes)), 's1');
    await store.refresh();
    state.revision = 5; // another writer advanced the session
    await expect(store.putViews('u', 1, [])).rejects.toBeInstanceOf(StaleRevisionError);
    // the store refetched the authoritative revision; no blind retry happened
    expect(store.currentRevision).toBe(5);
    expect(state.puts).toBe(0);
  });

  it('allows only one in-flight mutation', async () => {
    const { routes } = serverDouble();
    let release: () => void = () => undefined;
    const gate = new Promise<void>((resolve) => { release = resolve; });
    const slowRoutes: Route[] = [
      routes[0],
      {
        method: 'PUT',
        path: /\/views\//,
        handler: (body) => {
          void body;
          return { status: 200, payload: { revision: 1 } };
        },
      },
    ];
    const slowFetch: FetchLike = async (input, init) => {
      if ((init?.method ?? 'GET') === 'PUT') await gate;
      return fakeFetch(slowRoutes)(input, init);
    };
    const store = new SessionStore(new ApiClient('http://api', slowFetch), 's1');
    await store.refresh();
    const first = store.putViews('u', 1, []);
    await expect(store.putViews('u', 1, [])).rejects.toThrow(/in flight/);
    expect(store.isSolving).toBe(true);
    release();
    await first;
    expect(store.isSolving).toBe(false);
  });

  it('drops payloads from older revisions', async () => {
    const { routes } = serverDouble();
    const store = new SessionStore(new ApiClient('http://api', fakeFetch(routes)), 's1');
    await store.refresh();
    await store.refreshStatistics();
    expect(store.stats).not.toBeNull();
    await store.putViews('u', 1, []);
    // statistics were computed at revision 0; the mutation invalidated them
    expect(store.stats).toBeNull();
  });

  it('notifies subscribers on every transition', async () => {
    const { routes } = serverDouble();
    const store = new SessionStore(new ApiClient('http://api', fakeFetch(routes)), 's1');
    let calls = 0;
    store.subscribe(() => { calls += 1; });
    await store.refresh();
    await store.putViews('u', 1, []);
    expect(calls).toBeGreaterThanOrEqual(3); // refresh + solving on + solving off
  });
});
