# Hull Geometry Package