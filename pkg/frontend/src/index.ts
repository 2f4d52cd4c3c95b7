export { renderFigure } from "./figures.js";
export { FigureSpecSchema, FIGURE_KINDS } from "./schemas.js";
export { SchemaError } from "./csv.js";
export { main } from "./cli.js";
