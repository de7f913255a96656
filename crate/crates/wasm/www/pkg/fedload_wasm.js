/* @ts-self-types="./fedload_wasm.d.ts" */

/**
 * Inputs of the clipping simulation. Update norms in round `t` are
 * lognormal with median `norm_median·norm_decay^t`.
 */
export class ClipDemo {
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        ClipDemoFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_clipdemo_free(ptr, 0);
    }
    constructor() {
        const ret = wasm.clipdemo_new();
        this.__wbg_ptr = ret;
        ClipDemoFinalization.register(this, this.__wbg_ptr, this);
        return this;
    }
    /**
     * @returns {number}
     */
    get clients() {
        const ret = wasm.__wbg_get_clipdemo_clients(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {number}
     */
    get count_noise() {
        const ret = wasm.__wbg_get_clipdemo_count_noise(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get initial_clip() {
        const ret = wasm.__wbg_get_clipdemo_initial_clip(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get learning_rate() {
        const ret = wasm.__wbg_get_clipdemo_learning_rate(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get norm_decay() {
        const ret = wasm.__wbg_get_clipdemo_norm_decay(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get norm_median() {
        const ret = wasm.__wbg_get_clipdemo_norm_median(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get norm_spread() {
        const ret = wasm.__wbg_get_clipdemo_norm_spread(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get rounds() {
        const ret = wasm.__wbg_get_clipdemo_rounds(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {bigint}
     */
    get seed() {
        const ret = wasm.__wbg_get_clipdemo_seed(this.__wbg_ptr);
        return BigInt.asUintN(64, ret);
    }
    /**
     * @returns {number}
     */
    get target_quantile() {
        const ret = wasm.__wbg_get_clipdemo_target_quantile(this.__wbg_ptr);
        return ret;
    }
    /**
     * @param {number} arg0
     */
    set clients(arg0) {
        wasm.__wbg_set_clipdemo_clients(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set count_noise(arg0) {
        wasm.__wbg_set_clipdemo_count_noise(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set initial_clip(arg0) {
        wasm.__wbg_set_clipdemo_initial_clip(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set learning_rate(arg0) {
        wasm.__wbg_set_clipdemo_learning_rate(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set norm_decay(arg0) {
        wasm.__wbg_set_clipdemo_norm_decay(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set norm_median(arg0) {
        wasm.__wbg_set_clipdemo_norm_median(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set norm_spread(arg0) {
        wasm.__wbg_set_clipdemo_norm_spread(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set rounds(arg0) {
        wasm.__wbg_set_clipdemo_rounds(this.__wbg_ptr, arg0);
    }
    /**
     * @param {bigint} arg0
     */
    set seed(arg0) {
        wasm.__wbg_set_clipdemo_seed(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set target_quantile(arg0) {
        wasm.__wbg_set_clipdemo_target_quantile(this.__wbg_ptr, arg0);
    }
}
if (Symbol.dispose) ClipDemo.prototype[Symbol.dispose] = ClipDemo.prototype.free;

/**
 * Clip bound and the true norm quantile per round.
 */
export class ClipTrajectory {
    static __wrap(ptr) {
        const obj = Object.create(ClipTrajectory.prototype);
        obj.__wbg_ptr = ptr;
        ClipTrajectoryFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        ClipTrajectoryFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_cliptrajectory_free(ptr, 0);
    }
    /**
     * Bound in force at the start of each round, plus the final bound.
     * @returns {Float64Array}
     */
    get clip() {
        const ret = wasm.cliptrajectory_clip(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * Target quantile of the norm distribution in each round.
     * @returns {Float64Array}
     */
    get quantile() {
        const ret = wasm.cliptrajectory_quantile(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
}
if (Symbol.dispose) ClipTrajectory.prototype[Symbol.dispose] = ClipTrajectory.prototype.free;

/**
 * Hourly load of a synthetic population and its correlation structure.
 */
export class SyntheticLoad {
    static __wrap(ptr) {
        const obj = Object.create(SyntheticLoad.prototype);
        obj.__wbg_ptr = ptr;
        SyntheticLoadFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        SyntheticLoadFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_syntheticload_free(ptr, 0);
    }
    /**
     * @returns {number}
     */
    get clients() {
        const ret = wasm.syntheticload_clients(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * Row-major `clients × clients` Pearson coefficients.
     * @returns {Float64Array}
     */
    get correlation() {
        const ret = wasm.syntheticload_correlation(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {number}
     */
    get hours() {
        const ret = wasm.syntheticload_hours(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * Mean coefficient over all client pairs.
     * @returns {number}
     */
    get mean_correlation() {
        const ret = wasm.syntheticload_mean_correlation(this.__wbg_ptr);
        return ret;
    }
    /**
     * Row-major `clients × hours` kWh values.
     * @returns {Float64Array}
     */
    get values() {
        const ret = wasm.syntheticload_values(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
}
if (Symbol.dispose) SyntheticLoad.prototype[Symbol.dispose] = SyntheticLoad.prototype.free;

/**
 * @param {ClipDemo} demo
 * @returns {ClipTrajectory}
 */
export function adaptive_clip_trajectory(demo) {
    _assertClass(demo, ClipDemo);
    const ret = wasm.adaptive_clip_trajectory(demo.__wbg_ptr);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return ClipTrajectory.__wrap(ret[0]);
}

/**
 * @param {Float64Array} zs
 * @param {number} rounds
 * @param {number} q
 * @param {number} delta
 * @returns {Float64Array}
 */
export function privacy_curve(zs, rounds, q, delta) {
    const ptr0 = passArrayF64ToWasm0(zs, wasm.__wbindgen_malloc);
    const len0 = WASM_VECTOR_LEN;
    const ret = wasm.privacy_curve(ptr0, len0, rounds, q, delta);
    if (ret[3]) {
        throw takeFromExternrefTable0(ret[2]);
    }
    var v2 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
    wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
    return v2;
}

/**
 * @param {number} clients
 * @param {number} days
 * @param {number} shared_weight
 * @param {number} noise_std
 * @param {bigint} seed
 * @returns {SyntheticLoad}
 */
export function synthetic_load(clients, days, shared_weight, noise_std, seed) {
    const ret = wasm.synthetic_load(clients, days, shared_weight, noise_std, seed);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return SyntheticLoad.__wrap(ret[0]);
}
function __wbg_get_imports() {
    const import0 = {
        __proto__: null,
        __wbg_Error_30c8987f7c2ed4e2: function(arg0, arg1) {
            const ret = Error(getStringFromWasm0(arg0, arg1));
            return ret;
        },
        __wbg___wbindgen_throw_41e9ee4f547fc59a: function(arg0, arg1) {
            throw new Error(getStringFromWasm0(arg0, arg1));
        },
        __wbindgen_init_externref_table: function() {
            const table = wasm.__wbindgen_externrefs;
            const offset = table.grow(4);
            table.set(0, undefined);
            table.set(offset + 0, undefined);
            table.set(offset + 1, null);
            table.set(offset + 2, true);
            table.set(offset + 3, false);
        },
    };
    return {
        __proto__: null,
        "./fedload_wasm_bg.js": import0,
    };
}

const ClipDemoFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_clipdemo_free(ptr, 1));
const ClipTrajectoryFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_cliptrajectory_free(ptr, 1));
const SyntheticLoadFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_syntheticload_free(ptr, 1));

function _assertClass(instance, klass) {
    if (!(instance instanceof klass)) {
        throw new Error(`expected instance of ${klass.name}`);
    }
}

function getArrayF64FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getFloat64ArrayMemory0().subarray(ptr / 8, ptr / 8 + len);
}

let cachedFloat64ArrayMemory0 = null;
function getFloat64ArrayMemory0() {
    if (cachedFloat64ArrayMemory0 === null || cachedFloat64ArrayMemory0.byteLength === 0) {
        cachedFloat64ArrayMemory0 = new Float64Array(wasm.memory.buffer);
    }
    return cachedFloat64ArrayMemory0;
}

function getStringFromWasm0(ptr, len) {
    return decodeText(ptr >>> 0, len);
}

let cachedUint8ArrayMemory0 = null;
function getUint8ArrayMemory0() {
    if (cachedUint8ArrayMemory0 === null || cachedUint8ArrayMemory0.byteLength === 0) {
        cachedUint8ArrayMemory0 = new Uint8Array(wasm.memory.buffer);
    }
    return cachedUint8ArrayMemory0;
}

function passArrayF64ToWasm0(arg, malloc) {
    const ptr = malloc(arg.length * 8, 8) >>> 0;
    getFloat64ArrayMemory0().set(arg, ptr / 8);
    WASM_VECTOR_LEN = arg.length;
    return ptr;
}

function takeFromExternrefTable0(idx) {
    const value = wasm.__wbindgen_externrefs.get(idx);
    wasm.__externref_table_dealloc(idx);
    return value;
}

let cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
cachedTextDecoder.decode();
const MAX_SAFARI_DECODE_BYTES = 2146435072;
let numBytesDecoded = 0;
function decodeText(ptr, len) {
    numBytesDecoded += len;
    if (numBytesDecoded >= MAX_SAFARI_DECODE_BYTES) {
        cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
        cachedTextDecoder.decode();
        numBytesDecoded = len;
    }
    return cachedTextDecoder.decode(getUint8ArrayMemory0().subarray(ptr, ptr + len));
}

let WASM_VECTOR_LEN = 0;

let wasmModule, wasmInstance, wasm;
function __wbg_finalize_init(instance, module) {
    wasmInstance = instance;
    wasm = instance.exports;
    wasmModule = module;
    cachedFloat64ArrayMemory0 = null;
    cachedUint8ArrayMemory0 = null;
    wasm.__wbindgen_start();
    return wasm;
}

async function __wbg_load(module, imports) {
    if (typeof Response === 'function' && module instanceof Response) {
        if (!module.ok) {
            throw new Error(`failed to fetch Wasm: ${module.status} ${module.statusText} fetching '${module.url}'`);
        }

        if (typeof WebAssembly.instantiateStreaming === 'function') {
            try {
                return await WebAssembly.instantiateStreaming(module, imports);
            } catch (e) {
                const validResponse = expectedResponseType(module.type);

                if (validResponse && module.headers.get('Content-Type') !== 'application/wasm') {
                    console.warn("`WebAssembly.instantiateStreaming` failed because your server does not serve Wasm with `application/wasm` MIME type. Falling back to `WebAssembly.instantiate` which is slower. Original error:\n", e);

                } else { throw e; }
            }
        }

        const bytes = await module.arrayBuffer();
        return await WebAssembly.instantiate(bytes, imports);
    } else {
        const instance = await WebAssembly.instantiate(module, imports);

        if (instance instanceof WebAssembly.Instance) {
            return { instance, module };
        } else {
            return instance;
        }
    }

    function expectedResponseType(type) {
        switch (type) {
            case 'basic': case 'cors': case 'default': return true;
        }
        return false;
    }
}

function initSync(module) {
    if (wasm !== undefined) return wasm;


    if (module !== undefined) {
        if (Object.getPrototypeOf(module) === Object.prototype) {
            ({module} = module)
        } else {
            console.warn('using deprecated parameters for `initSync()`; pass a single object instead')
        }
    }

    const imports = __wbg_get_imports();
    if (!(module instanceof WebAssembly.Module)) {
        module = new WebAssembly.Module(module);
    }
    const instance = new WebAssembly.Instance(module, imports);
    return __wbg_finalize_init(instance, module);
}

async function __wbg_init(module_or_path) {
    if (wasm !== undefined) return wasm;


    if (module_or_path !== undefined) {
        if (Object.getPrototypeOf(module_or_path) === Object.prototype) {
            ({module_or_path} = module_or_path)
        } else {
            console.warn('using deprecated parameters for the initialization function; pass a single object instead')
        }
    }

    if (module_or_path === undefined) {
        module_or_path = new URL('fedload_wasm_bg.wasm', import.meta.url);
    }
    const imports = __wbg_get_imports();

    if (typeof module_or_path === 'string' || (typeof Request === 'function' && module_or_path instanceof Request) || (typeof URL === 'function' && module_or_path instanceof URL)) {
        module_or_path = fetch(module_or_path);
    }

    const { instance, module } = await __wbg_load(await module_or_path, imports);

    return __wbg_finalize_init(instance, module);
}

export { initSync, __wbg_init as default };
