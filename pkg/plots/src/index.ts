export {
  columnIndex,
  configNumber,
  numericCell,
  numericColumn,
  parseCsv,
  readCsvFile,
  runLabel,
  type CsvTable,
} from "./csv.js";
export {
  fmt,
  renderSvg,
  type AxisScale,
  type FigureData,
  type Series,
  type VLine,
} from "./svg.js";
export {
  FIGURE_KINDS,
  buildFigure,
  plot,
  type FigureKind,
  type FigureSpec,
  type PlotResult,
} from "./figures.js";
